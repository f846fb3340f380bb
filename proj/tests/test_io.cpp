#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mmjsq/model_file.hpp"
#include "mmjsq/report.hpp"
#include "test_util.hpp"

using namespace mmjsq;
using nlohmann::json;

namespace {

json valid_doc() {
  return json::parse(R"({
    "n": 2,
    "alpha": [[0, 1], [2, 0]],
    "lambda_base": [1, 2],
    "mu": [[1, 0.5], [1.5, 2]],
    "rho": 0.7
  })");
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("model file round trip") {
    const ModelFile f = parse_model_file(valid_doc());
    CHECK(f.n == 2);
    CHECK(f.rho.value() == 0.7);
    CHECK_FALSE(f.alpha_scale.has_value());
    const ModelFile g = parse_model_file(to_json(f));
    CHECK(g.alpha == f.alpha);
    CHECK(g.mu == f.mu);
    CHECK(g.lambda_base == f.lambda_base);
    const MmJsqModel model = build_model(f);
    CHECK(derived_rates(model).rho == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(derived_rates(build_model(f, 0.9)).rho == doctest::Approx(0.9).epsilon(1e-15));
  }

  TEST_CASE("alpha_scale multiplies the chain") {
    json doc = valid_doc();
    doc["alpha_scale"] = 0.25;
    const MmJsqModel model = build_base_model(parse_model_file(doc));
    CHECK(model.chain().rate(1, 0) == 0.5);
    doc["alpha_scale"] = -1.0;
    CHECK(testing::code_of([&] { build_base_model(parse_model_file(doc)); }) == ErrorCode::InvalidModel);
  }

  TEST_CASE("malformed model files raise ParseError") {
    auto bad = [](auto mutate) {
      json doc = valid_doc();
      mutate(doc);
      return testing::code_of([&] { parse_model_file(doc); });
    };
    CHECK(bad([](json& d) { d.erase("mu"); }) == ErrorCode::ParseError);
    CHECK(bad([](json& d) { d["n"] = 0; }) == ErrorCode::ParseError);
    CHECK(bad([](json& d) { d["n"] = 1.5; }) == ErrorCode::ParseError);
    CHECK(bad([](json& d) { d["n"] = 3; }) == ErrorCode::ParseError);
    CHECK(bad([](json& d) { d["alpha"] = json::parse("[[0, 1, 0], [1, 0, 0]]"); }) == ErrorCode::ParseError);
    CHECK(bad([](json& d) { d["lambda_base"] = json::parse("[1]"); }) == ErrorCode::ParseError);
    CHECK(bad([](json& d) { d["mu"][0][1] = "fast"; }) == ErrorCode::ParseError);
    CHECK(bad([](json& d) { d["mu"] = json::parse("[[1, 2], [3]]"); }) == ErrorCode::ParseError);
    CHECK(bad([](json& d) { d["rho"] = "high"; }) == ErrorCode::ParseError);
    CHECK(testing::code_of([] { parse_model_file(json::array()); }) == ErrorCode::ParseError);
    CHECK(testing::code_of([] { load_model_file("/nonexistent/model.json"); }) == ErrorCode::ParseError);
  }

  TEST_CASE("semantic model errors are not parse errors") {
    json doc = valid_doc();
    doc["alpha"] = json::parse("[[0, 1], [0, 0]]");
    CHECK(testing::code_of([&] { build_model(parse_model_file(doc)); }) == ErrorCode::NotIrreducible);
  }

  TEST_CASE("format_double round trips") {
    for (double x : {0.1, 1.0 / 3, 35.0 / 6, 1e-300, 123456789.125, -2.5}) {
      const std::string s = format_double(x);
      CHECK(std::stod(s) == x);
    }
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(format_double(-INFINITY) == "-inf");
  }

  TEST_CASE("analysis report contents") {
    json doc = valid_doc();
    doc["reference_k_star"] = 1.0 / 96;
    const ModelFile f = parse_model_file(doc);
    const json r = analysis_report(f, build_model(f), {1.0, 2.0});
    CHECK(r.at("prediction").at("k_star").get<double>() == doctest::Approx(1.0 / 96).epsilon(1e-10));
    CHECK(r.at("ssc_satisfied").is_boolean());
    CHECK(r.at("reference").at("agrees").get<bool>());
    CHECK(r.at("limit_laplace").size() == 2);
    CHECK(r.at("pi").size() == 2);
  }

  TEST_CASE("runs CSV has one line per run plus a header") {
    RunStats s;
    s.mean_q = {1.0, 2.0};
    s.ssc_gap = {0.5, 0.5};
    std::ostringstream os;
    write_runs_csv(os, {s, s, s});
    std::size_t lines = 0;
    for (char c : os.str()) lines += c == '\n';
    CHECK(lines == 4);
  }
}
