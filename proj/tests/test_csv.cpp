#include <gtest/gtest.h>

#include "ehr/csv.hpp"
#include "ehr/errors.hpp"
#include "reference_pipeline.hpp"
#include "test_util.hpp"

using namespace ehr;

namespace {

std::vector<std::vector<std::string>> read_all(const std::filesystem::path& p) {
    CsvReader r(p, 7);  // tiny buffer exercises refills
    std::vector<std::vector<std::string>> rows{r.header()};
    std::vector<std::string> row;
    while (r.next(row)) rows.push_back(row);
    return rows;
}

}  // namespace

TEST(Csv, QuotesEscapesAndLineEndings) {
    ehr::testing::TempDir dir;
    ehr::testing::spit(dir / "a.csv",
                       "id,text,n\r\n"
                       "1,\"a,b\",2\r\n"
                       "2,\"say \"\"hi\"\"\",\n"
                       "3,\"multi\nline\",x\n"
                       "4,,");
    const auto rows = read_all(dir / "a.csv");
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[1][1], "a,b");
    EXPECT_EQ(rows[2][1], "say \"hi\"");
    EXPECT_EQ(rows[2][2], "");
    EXPECT_EQ(rows[3][1], "multi\nline");
    EXPECT_EQ(rows[4], (std::vector<std::string>{"4", "", ""}));
    EXPECT_EQ(rows, ref::read_csv(dir / "a.csv"));
}

TEST(Csv, RowIndexAndLine) {
    ehr::testing::TempDir dir;
    ehr::testing::spit(dir / "a.csv", "h\n\"x\ny\"\nz\n");
    CsvReader r(dir / "a.csv");
    EXPECT_EQ(r.column("h"), 0);
    EXPECT_EQ(r.column("nope"), -1);
    std::vector<std::string> row;
    ASSERT_TRUE(r.next(row));
    EXPECT_EQ(r.row_index(), 0u);
    EXPECT_EQ(r.line(), 2u);
    ASSERT_TRUE(r.next(row));
    EXPECT_EQ(r.row_index(), 1u);
    EXPECT_EQ(r.line(), 4u);
    EXPECT_FALSE(r.next(row));
}

TEST(Csv, Errors) {
    ehr::testing::TempDir dir;
    EXPECT_THROW(CsvReader(dir / "missing.csv"), IoError);
    ehr::testing::spit(dir / "bad.csv", "a,b\n1,2,3\n");
    CsvReader r(dir / "bad.csv");
    std::vector<std::string> row;
    EXPECT_THROW(r.next(row), IoError);
}

TEST(Csv, Escape) {
    EXPECT_EQ(csv_escape("plain"), "plain");
    EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_escape("q\"q"), "\"q\"\"q\"");
}
