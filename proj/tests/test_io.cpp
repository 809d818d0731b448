#include <gtest/gtest.h>

#include <sstream>

#include "cotec/io.hpp"
#include "test_util.hpp"

using cotec::DenseTensor;
using cotec::Shape;

TEST(TnsFormat, ParsesWithComments) {
    std::istringstream in(
        "# a 2x3 example\n"
        "2\n"
        "2 3\n"
        "1 2 3\n"
        "# trailing comment\n"
        "4 5 6\n");
    DenseTensor t = cotec::read_tns(in);
    EXPECT_EQ(t.shape(), Shape({2, 3}));
    EXPECT_DOUBLE_EQ(t[5], 6.0);
}

TEST(TnsFormat, RoundTripIsExact) {
    cotec::Rng rng(2);
    DenseTensor a = testutil::random_tensor(rng, Shape({3, 2, 4}), -5, 5);
    std::ostringstream out;
    cotec::write_tns(out, a);
    std::istringstream in(out.str());
    DenseTensor b = cotec::read_tns(in);
    EXPECT_TRUE(a.same_values(b));
}

TEST(TnsFormat, RejectsMalformedInput) {
    std::istringstream missing("2\n2 2\n1 2 3\n");
    EXPECT_THROW(cotec::read_tns(missing), std::runtime_error);
    std::istringstream trailing("1\n2\n1 2 3\n");
    EXPECT_THROW(cotec::read_tns(trailing), std::runtime_error);
    std::istringstream badorder("0\n");
    EXPECT_THROW(cotec::read_tns(badorder), std::runtime_error);
    // 'nan' is rejected either by the parser or by tensor construction
    std::istringstream nan_entry("1\n2\n1 nan\n");
    EXPECT_ANY_THROW(cotec::read_tns(nan_entry));
}

TEST(CsvFormat, ReadsHeaderlessMatrix) {
    std::istringstream in("1,2,3\n4,5,6\n");
    DenseTensor t = cotec::read_csv_matrix(in);
    EXPECT_EQ(t.shape(), Shape({2, 3}));
    EXPECT_DOUBLE_EQ(t[3], 4.0);
}

TEST(CsvFormat, RejectsRaggedRows) {
    std::istringstream in("1,2,3\n4,5\n");
    EXPECT_THROW(cotec::read_csv_matrix(in), std::runtime_error);
}

TEST(TruthFormat, RoundTrip) {
    cotec::TruthFile t;
    t.labels = {{0, 1, 0, 1, 1}, {2, 0, 1}};
    t.k = {2, 3};
    t.planted_objective = 12.5;
    std::ostringstream out;
    cotec::write_truth(out, t);
    std::istringstream in(out.str());
    cotec::TruthFile back = cotec::read_truth(in);
    EXPECT_EQ(back.labels, t.labels);
    EXPECT_EQ(back.k, t.k);
    EXPECT_DOUBLE_EQ(back.planted_objective, t.planted_objective);
}

TEST(TruthFormat, RejectsOutOfRangeLabel) {
    std::istringstream in("1\n3\n2\n0 2 0\n1.0\n");  // label 2 with k=2
    EXPECT_THROW(cotec::read_truth(in), std::runtime_error);
}
