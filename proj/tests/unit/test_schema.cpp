#include <algorithm>

#include "doctest.h"
#include "test_support.hpp"
#include "uavd/schema.hpp"

using namespace uavd;
using uavd::testing::fixture;
using uavd::testing::fixtures;

namespace {

const char* kMinimal = R"({
  "sdk_id": "demo",
  "import_stmt": "import demo",
  "handle": "d",
  "capabilities": ["takeoff", "land", "move"],
  "functions": [
    {"name": "takeoff", "capability": "takeoff", "description": "take off", "params": []},
    {"name": "land", "capability": "land", "description": "land", "params": []},
    {"name": "forward", "capability": "move", "description": "fly forward",
     "params": [{"name": "distance", "kind": "float", "unit": "m", "min": 0.5, "max": 5.0}]}
  ]
})";

bool has_message(const DiagnosticList& d, std::string_view needle) {
  return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) { return x.message.find(needle) != std::string::npos; });
}

}  // namespace

TEST_SUITE("schema") {
  TEST_CASE("tellopy fixture loads with the fixture's function count") {
    const auto path = uavd::testing::fixtures_dir() + "/tellopy.json";
    const auto raw = nlohmann::json::parse(uavd::testing::read_text(path));
    auto s = load_schema(path);
    REQUIRE(s.ok());
    CHECK(s.value().sdk_id == "tellopy");
    CHECK(s.value().functions.size() == raw["functions"].size());
    CHECK(s.value().functions.size() == 14);
  }

  TEST_CASE("all eight fixtures validate and carry the expected ids") {
    const auto& all = fixtures();
    REQUIRE(all.size() == 8);
    std::vector<std::string> ids;
    for (const auto& s : all) {
      CHECK(validate_schema(s).empty());
      CHECK(s.functions.size() >= 8);
      CHECK(s.functions.size() <= 15);
      ids.push_back(s.sdk_id);
    }
    std::sort(ids.begin(), ids.end());
    CHECK(ids == std::vector<std::string>{"airsdk", "dronekit", "mavproxy", "mavsdk", "olympe", "skydio", "tellopy",
                                          "wingtra"});
  }

  TEST_CASE("duplicate function name is a schema error") {
    std::string text = kMinimal;
    text.replace(text.find("\"land\", \"capability\""), 6, "\"takeoff\"");
    auto s = parse_schema(text);
    REQUIRE_FALSE(s.ok());
    CHECK(has_message(s.diagnostics(), "duplicate function name"));
    CHECK(s.diagnostics().front().code == "SchemaError");
    CHECK(s.diagnostics().front().where.field == "functions[1].name");
  }

  TEST_CASE("empty and malformed text are parse errors with a locator") {
    auto empty = parse_schema("");
    REQUIRE_FALSE(empty.ok());
    CHECK(empty.diagnostics().front().code == "ParseError");

    auto broken = parse_schema("{\n  \"sdk_id\": \"x\",\n  oops\n}");
    REQUIRE_FALSE(broken.ok());
    CHECK(broken.diagnostics().front().where.line == 3);
  }

  TEST_CASE("unknown keys are rejected in strict mode") {
    std::string text = kMinimal;
    text.insert(text.find("\"handle\""), "\"vendor\": \"acme\",\n  ");
    auto s = parse_schema(text);
    REQUIRE_FALSE(s.ok());
    CHECK(has_message(s.diagnostics(), "vendor"));
  }

  TEST_CASE("validate_schema reports each violated invariant") {
    SdkSchema s = parse_schema(kMinimal).value();
    CHECK(validate_schema(s).empty());

    SdkSchema bad = s;
    bad.functions[2].params[0].min = 5.0;
    bad.functions[2].params[0].max = 2.0;
    CHECK(has_message(validate_schema(bad), "min exceeds max"));

    bad = s;
    bad.functions[2].capability = "video";
    CHECK(has_message(validate_schema(bad), "unknown capability"));

    bad = s;
    bad.sdk_id = "Demo";
    CHECK(validate_schema(bad).size() == 1);

    bad = s;
    bad.functions.clear();
    CHECK_FALSE(validate_schema(bad).empty());

    bad = s;
    ParamSpec opt{"speed", ParamKind::kFloat, "m/s", 0.0, 2.0, {}, false, std::nullopt};
    ParamSpec req{"height", ParamKind::kFloat, "m", 0.0, 2.0, {}, true, std::nullopt};
    bad.functions[2].params = {opt, req};
    CHECK(has_message(validate_schema(bad), "required param follows an optional param"));

    bad = s;
    bad.functions[2].params[0].kind = ParamKind::kEnum;
    bad.functions[2].params[0].min.reset();
    bad.functions[2].params[0].max.reset();
    CHECK(has_message(validate_schema(bad), "nonempty allowed"));

    bad = s;
    bad.functions[2].params[0].default_value = Literal{9.0};
    CHECK_FALSE(validate_schema(bad).empty());

    bad = s;
    bad.functions[1].params = {s.functions[2].params[0], s.functions[2].params[0]};
    bad.functions[1].params[1].required = true;
    CHECK(has_message(validate_schema(bad), "duplicate param name"));
  }

  TEST_CASE("lookup_function is exact and case-sensitive") {
    const auto& t = fixture("tellopy");
    const FunctionSpec* f = lookup_function(t, t.functions.front().name);
    REQUIRE(f != nullptr);
    CHECK(f == &t.functions.front());
    CHECK(f->name == "takeoff");
    CHECK(lookup_function(t, "no_such_fn_xyz") == nullptr);
    CHECK(lookup_function(t, "Takeoff") == nullptr);
    for (const auto& s : fixtures())
      for (const auto& fn : s.functions) CHECK(*lookup_function(s, fn.name) == fn);
  }

  TEST_CASE("serialize then parse round-trips every fixture") {
    for (const auto& s : fixtures()) {
      auto again = parse_schema(serialize_schema(s));
      REQUIRE(again.ok());
      CHECK(again.value() == s);
    }
  }

  TEST_CASE("schema directory with a bad file throws with its diagnostics") {
    const auto dir = std::filesystem::temp_directory_path() / "uavd_schema_bad";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "good.json") << kMinimal;
    std::ofstream(dir / "zbad.json") << "{}";
    CHECK_THROWS_AS(load_schema_dir(dir), SchemaLoadError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("capability vocabulary is the fixed twelve tags") {
    CHECK(kCapabilities.size() == 12);
    CHECK(is_capability("waypoint"));
    CHECK_FALSE(is_capability("teleport"));
  }
}
