#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <tabctx/csv.hpp>
#include <tabctx/error.hpp>
#include <tabctx/schema.hpp>

using namespace tabctx;

namespace {

Table read(const std::string& text, CsvOptions opt = {}) {
    std::istringstream in(text);
    return read_csv(in, opt);
}

ColumnKind kind_of(std::vector<std::string> values, SchemaOptions opt = {}) {
    return infer_schema({RawColumn{"c", std::move(values)}}, opt).at(0).kind;
}

}  // namespace

TEST_CASE("schema inference") {
    CHECK(kind_of({"1.5", "2", "-1"}) == ColumnKind::Numeric);
    CHECK(kind_of({"A", "B", "A"}) == ColumnKind::Categorical);
    SchemaOptions dated;
    dated.date_format = "%Y-%m-%d";
    CHECK(kind_of({"2019-06-30", "2019-07-01"}, dated) == ColumnKind::Timestamp);
    CHECK(kind_of({"2019-06-30", "2019-07-01"}) == ColumnKind::Categorical);

    SchemaOptions hinted;
    hinted.hints["c"] = ColumnKind::Categorical;
    CHECK(kind_of({"1", "2"}, hinted) == ColumnKind::Categorical);

    // 99% rule: one stray token in 200 numeric entries keeps the column numeric.
    std::vector<std::string> mostly(199, "3.25");
    mostly.push_back("oops");
    CHECK(kind_of(mostly) == ColumnKind::Numeric);
    std::vector<std::string> fewer(98, "3.25");
    fewer.push_back("x");
    fewer.push_back("y");
    CHECK(kind_of(fewer) == ColumnKind::Categorical);
}

TEST_CASE("schema inference errors") {
    CHECK_THROWS_AS(infer_schema({}, {}), StructuralError);
    CHECK_THROWS_AS(infer_schema({RawColumn{"a", {"1"}}, RawColumn{"b", {"1", "2"}}}, {}), StructuralError);
    CHECK_THROWS_AS(infer_schema({RawColumn{"a", {}}}, {}), StructuralError);
}

TEST_CASE("basic CSV load") {
    const auto t = read("a,b\n1,x\n2,y\n");
    CHECK(t.n_rows() == 2);
    CHECK(t.n_columns() == 2);
    CHECK(t.column("a").kind == ColumnKind::Numeric);
    CHECK(t.column("b").kind == ColumnKind::Categorical);
    CHECK(t.row_ids() == std::vector<RowId>{RowId{0}, RowId{1}});
}

TEST_CASE("quoted empty field is missing, not an empty category") {
    const auto t = read("a,b\n\"\",x\n1,\"\"\n2,y\n");
    CHECK(t.column("a").is_missing(0));
    CHECK(t.column("b").is_missing(1));
    CHECK_FALSE(t.column("b").is_missing(0));
    const auto u = read("a\nNA\n3\n");
    CHECK(u.column("a").is_missing(0));
}

TEST_CASE("RFC 4180 quoting") {
    const auto t = read("name,v\n\"a,b\",1\n\"say \"\"hi\"\"\",2\n\"multi\nline\",3\n");
    const auto& c = t.column("name");
    CHECK(c.strings[0] == "a,b");
    CHECK(c.strings[1] == "say \"hi\"");
    CHECK(c.strings[2] == "multi\nline");
}

TEST_CASE("malformed input names the line") {
    try {
        read("a,b\n1,2\n3\n");
        FAIL("expected error");
    } catch (const StructuralError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(read("a,a\n1,2\n"), StructuralError);
    CHECK_THROWS_AS(read("a\n\"open\n"), StructuralError);
}

TEST_CASE("unparseable date under a timestamp hint names the row") {
    CsvOptions opt;
    opt.schema.date_format = "%Y-%m-%d";
    opt.schema.hints["d"] = ColumnKind::Timestamp;
    try {
        read("d\n2019-06-01\nnot-a-date\n", opt);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("timestamps parse to epoch seconds and round trip") {
    const auto s = parse_timestamp("2019-06-30", "%Y-%m-%d");
    REQUIRE(s);
    CHECK(*s == 1561852800.0);
    CHECK(format_timestamp(*s, "%Y-%m-%d") == "2019-06-30");
    CHECK_FALSE(parse_timestamp("2019-02-30", "%Y-%m-%d"));
}

TEST_CASE("label normalization makes the minority class 1") {
    CsvOptions opt;
    opt.label = "y";
    // 0/1 already minority-1: untouched.
    auto t = read("x,y\n1,0\n2,0\n3,1\n", opt);
    CHECK(t.labels() == std::vector<int>{0, 0, 1});
    // 1 is the majority: flipped.
    t = read("x,y\n1,1\n2,1\n3,0\n", opt);
    CHECK(t.labels() == std::vector<int>{0, 0, 1});
    // Token labels: the rarer token becomes 1.
    t = read("x,y\n1,good\n2,bad\n3,good\n", opt);
    CHECK(t.labels() == std::vector<int>{0, 1, 0});
    CHECK_THROWS_AS(read("x,y\n1,a\n2,b\n3,c\n", opt), DataError);
    CHECK_THROWS_AS(read("x,y\n1,0\n2,\n3,1\n", opt), DataError);
    opt.label = "nope";
    CHECK_THROWS_AS(read("x,y\n1,0\n", opt), ConfigError);
}

TEST_CASE("id column supplies stable row ids") {
    const auto t = read("row_id,a\n17,1\n4,2\n");
    CHECK(t.row_ids() == std::vector<RowId>{RowId{17}, RowId{4}});
    CHECK_FALSE(t.find("row_id"));
}

TEST_CASE("write then read preserves values, ids and missingness") {
    CsvOptions opt;
    opt.label = "y";
    opt.schema.date_format = "%Y-%m-%d";
    const std::string text = "row_id,a,b,d,y\n5,1.25,x,2020-01-02,0\n9,,\"q,r\",2020-03-04,1\n11,-3,,2021-12-31,0\n";
    const auto t = read(text, opt);
    std::ostringstream out;
    write_csv(out, t, opt);
    const auto u = read(out.str(), opt);
    CHECK(u.row_ids() == t.row_ids());
    CHECK(u.column("a").missing == t.column("a").missing);
    CHECK(u.column("a").numbers[0] == 1.25);
    CHECK(u.column("b").strings[1] == "q,r");
    CHECK(u.column("b").is_missing(2));
    CHECK(u.column("d").kind == ColumnKind::Timestamp);
    CHECK(u.column("d").numbers == t.column("d").numbers);
    CHECK(u.labels() == t.labels());

    const auto path = std::filesystem::temp_directory_path() / "tabctx_csv_roundtrip.csv";
    save_csv(path, t, opt);
    CHECK(load_csv(path, opt).row_ids() == t.row_ids());
    std::filesystem::remove(path);
}
