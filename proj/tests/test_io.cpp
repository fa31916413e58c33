#include "anosov/io.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace anosov;
namespace fs = std::filesystem;

TEST_SUITE("io") {

TEST_CASE("model config") {
  const io::ModelConfig c = io::parse_model(R"(
[model]
base = [[2, 1], [1, 1]]
[model.roof]
constant = 1
terms = [{ kx = 1, ky = 0, c = 0.1 }]
[[model.timechange]]
z_lo = 0.15
z_hi = 0.75
terms = [{ kx = 1, ky = 1, s = 0.1 }]
[tolerances]
split = 1e-11
[run]
seed = 42
)");
  CHECK(c.model.base(0, 0) == 2);
  CHECK(c.model.base(1, 0) == 1);
  CHECK(c.model.r(Vec2(0.0, 0.3)) == doctest::Approx(1.1));
  CHECK(c.model.has_timechange());
  CHECK(c.seed == 42);
  CHECK(c.tolerance("split", 1.0) == 1e-11);
  CHECK(c.tolerance("other", 3.0) == 3.0);

  auto code = [](const std::string& text) {
    try {
      io::parse_model(text);
    } catch (const Error& e) {
      return e.code() + (e.kind() == ErrorKind::io ? "/io" : "/other");
    }
    return std::string("none");
  };
  CHECK(code("[model\nbase = 1") == "config_unreadable/io");
  CHECK(code("[model]\nbase = [[2, 1], [1, 1]]\n[model.roof]\nconstant = 1\ncolour = 3\n") == "config/other");
  CHECK(code("[model]\nbase = [[2, 1], [1, 1]]\n") == "config/other");
  // det 2 is not a toral automorphism
  CHECK(code("[model]\nbase = [[2, 0], [0, 1]]\n[model.roof]\nconstant = 1\n") != "none");
  CHECK_THROWS_WITH_AS(io::load_model("/nonexistent/model.toml"), doctest::Contains("config_unreadable"), Error);
}

TEST_CASE("lists and numbers") {
  const Point3 p = io::parse_point(" 0.2, 0.3 ,0.1");
  CHECK(p == Point3(0.2, 0.3, 0.1));
  CHECK_THROWS_AS(io::parse_point("0.2,0.3"), Error);
  CHECK_THROWS_AS(io::parse_point("0.2,x,0.1"), Error);
  CHECK_THROWS_AS(io::parse_list("1,,2"), Error);

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(gen) * std::pow(10.0, 40 * u(gen));
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(-0.0) == "0");
  CHECK(io::format_double(0.5) == "0.5");
}

TEST_CASE("csv quoting round trip") {
  io::Csv csv({"a", "b,c", "d"});
  csv.row(std::vector<std::string>{"plain", "with \"quote\"", "line\nbreak"});
  csv.row(std::vector<double>{1.5, -2.0, 1e-300});
  const std::string text = csv.str();
  CHECK(text.substr(0, 11) == "a,\"b,c\",d\r\n");
  const io::CsvTable t = io::parse_csv(text);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.header[1] == "b,c");
  CHECK(t.rows[0][1] == "with \"quote\"");
  CHECK(t.rows[0][2] == "line\nbreak");
  CHECK(t.rows[1][2] == "1e-300");
  CHECK(t.column("d") == 2);
  CHECK_THROWS_AS(io::parse_csv("a,b\r\n\"open,1\r\n"), Error);
  CHECK_THROWS_AS(csv.row(std::vector<double>{1.0}), Error);
}

TEST_CASE("sha256 test vectors") {
  CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("schemas") {
  const auto csv_schema = nlohmann::json::parse(R"({"format": "csv", "columns": [
      {"name": "tau", "type": "number", "min": -1, "max": 1}, {"name": "k", "type": "integer"}]})");
  CHECK(io::validate_artifact(csv_schema, "tau,k\r\n0.5,3\r\n-1,4\r\n").empty());
  CHECK(io::validate_artifact(csv_schema, "tau,k\r\n1.5,3\r\n").size() == 1);
  CHECK(io::validate_artifact(csv_schema, "tau,k\r\nx,3.5\r\n").size() == 2);
  CHECK(io::validate_artifact(csv_schema, "tau,j\r\n0,3\r\n").size() == 1);
  CHECK(io::validate_artifact(csv_schema, "tau,k\r\n0\r\n").size() == 1);

  const auto json_schema = nlohmann::json::parse(R"({"format": "json", "required": ["value", "flag"],
      "properties": {"value": {"type": "number", "min": 0, "max": 2}, "flag": {"type": "boolean"},
                     "p": {"type": "array", "length": 3, "items": {"type": "number"}}}})");
  CHECK(io::validate_artifact(json_schema, R"({"value": 1.2, "flag": false, "p": [1, 2, 3]})").empty());
  CHECK(io::validate_artifact(json_schema, R"({"value": 2.5, "flag": 1})").size() == 2);
  CHECK(io::validate_artifact(json_schema, R"({"value": 0, "flag": true, "p": [1, 2]})").size() == 1);
  CHECK(io::validate_artifact(json_schema, R"({"flag": true})").size() == 1);
  CHECK(io::validate_artifact(json_schema, "{").size() == 1);
}

TEST_CASE("run writer and manifest") {
  const fs::path dir = fs::temp_directory_path() / "anosov_io_test";
  fs::remove_all(dir);
  auto make = [&] {
    io::RunWriter w(dir, "template");
    w.param("point", "0.2,0.3,0.1");
    w.config("m.toml", "[model]\nbase = 1\n");
    w.artifact("a.csv", "x\r\n1\r\n");
    nlohmann::json j;
    j["z"] = 1;
    j["a"] = 0.1;
    w.json("a.json", j);
    return w;
  };
  io::RunWriter w = make();
  CHECK_THROWS_AS(w.artifact("a.csv", ""), Error);
  w.finish();
  const std::string m1 = io::read_file(dir / "manifest.txt");
  CHECK(m1 == make().manifest());
  CHECK(m1.find("artifact a.csv sha256 " + io::sha256_hex("x\r\n1\r\n")) != std::string::npos);
  CHECK(m1.find("| base = 1") != std::string::npos);
  CHECK(io::read_file(dir / "a.json") == "{\n  \"a\": 0.1,\n  \"z\": 1\n}\n");
  fs::remove_all(dir);
}

}  // TEST_SUITE
