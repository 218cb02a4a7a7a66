#include <doctest.h>

#include <onestep/error.hpp>
#include <onestep/io.hpp>

#include <filesystem>
#include <fstream>
#include <unistd.h>

using namespace onestep;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("onestep_io_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text)
{
    const fs::path p = scratch(name);
    std::ofstream(p) << text;
    return p;
}

std::string error_of(const fs::path& p, const std::string& response = "y")
{
    try {
        ingest_csv(p, response);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_SUITE("io")
{
    TEST_CASE("small file")
    {
        const auto in = ingest_csv(write_file("small.csv", "x,y\n1,2\n2,4.5\n3,-1e-3\n"), "y");
        CHECK(in.data.n() == 3);
        CHECK(in.data.p() == 1);
        CHECK(in.data.y[2] == -1e-3);
        CHECK(in.manifest.rows == 3);
        CHECK(in.manifest.columns == std::vector<std::string>{"x"});
        CHECK(in.data.column_names == std::vector<std::string>{"x"});
    }

    TEST_CASE("response column can sit anywhere; CRLF and spaces are tolerated")
    {
        const auto in = ingest_csv(write_file("crlf.csv", "y, a ,b\r\n1, 2, 3\r\n0,+5,7\r\n\r\n2,1,0\r\n"), "y");
        CHECK(in.data.n() == 3);
        CHECK(in.data.column_names == std::vector<std::string>{"a", "b"});
        CHECK(in.data.X(1, 0) == 5.0);
        CHECK(in.data.y[1] == 0.0);
    }

    TEST_CASE("constant columns are dropped with a warning")
    {
        const auto in = ingest_csv(write_file("const.csv", "a,c,b,y\n1,7,2,1\n2,7,0,2\n3,7,5,3\n"), "y");
        CHECK(in.data.p() == 2);
        CHECK(in.manifest.dropped == std::vector<std::string>{"c"});
        REQUIRE(in.manifest.warnings.size() == 1);
        CHECK(in.manifest.warnings[0].find("c") != std::string::npos);
        CHECK(to_json(in.manifest)["dropped"][0] == "c");
        CHECK(error_of(write_file("allconst.csv", "a,y\n1,1\n1,2\n")).find("no non-constant") != std::string::npos);
    }

    TEST_CASE("bad cells cite row and column")
    {
        const auto nan = error_of(write_file("nan.csv", "x1,x2,y\n1,2,3\n1,3,3\n2,2,3\n4,1,3\n5,NaN,3\n"));
        CHECK(nan.find("row 5") != std::string::npos);
        CHECK(nan.find("\"x2\"") != std::string::npos);
        const auto text = error_of(write_file("text.csv", "x1,x2,y\n1,abc,3\n"));
        CHECK(text.find("non-numeric") != std::string::npos);
        CHECK(text.find("row 1") != std::string::npos);
        const auto missing = error_of(write_file("missing.csv", "x1,x2,y\n1,2,3\n1,,3\n"));
        CHECK(missing.find("missing value") != std::string::npos);
        CHECK(missing.find("row 2") != std::string::npos);
        CHECK(missing.find("\"x2\"") != std::string::npos);
        CHECK(error_of(write_file("inf.csv", "x,y\n1,inf\n2,3\n")).find("non-finite") != std::string::npos);
        CHECK(error_of(write_file("ragged.csv", "x,y\n1,2\n3\n")).find("row 2") != std::string::npos);
    }

    TEST_CASE("header problems")
    {
        CHECK(error_of(write_file("noresp.csv", "a,b\n1,2\n2,3\n")).find("\"y\" not found") != std::string::npos);
        CHECK_FALSE(error_of(write_file("empty.csv", "")).empty());
        CHECK(error_of(write_file("dup.csv", "a,a,y\n1,2,3\n")).find("duplicate") != std::string::npos);
        CHECK(error_of(write_file("onlyhead.csv", "a,y\n")).find("no data rows") != std::string::npos);
        CHECK(error_of(scratch("does_not_exist.csv")).find("cannot open") != std::string::npos);
    }

    TEST_CASE("binomial responses are checked")
    {
        CHECK_THROWS_AS(ingest_csv(write_file("bin.csv", "x,y\n1,0\n2,2\n3,1\n"), "y", Likelihood::Binomial),
                        ValidationError);
        CHECK(ingest_csv(write_file("bin2.csv", "x,y\n1,0\n2,1\n3,1\n"), "y", Likelihood::Binomial).data.family ==
              Likelihood::Binomial);
    }

    TEST_CASE("writing")
    {
        const fs::path dir = scratch("nested/a/b");
        ensure_directory(dir);
        write_text(dir / "f.txt", "hello\n");
        CHECK(read_text(dir / "f.txt") == "hello\n");
        CHECK_THROWS_AS(ensure_directory("/proc/onestep_cannot_exist"), ValidationError);
        CHECK_THROWS_AS(write_text("/proc/onestep_nope/f.txt", "x"), ValidationError);
        CHECK(dump_json(nlohmann::ordered_json{{"a", 1}}) == "{\n  \"a\": 1\n}\n");
    }
}
