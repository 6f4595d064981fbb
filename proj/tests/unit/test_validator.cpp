#include "doctest.h"
#include "test_support.hpp"
#include "uavd/dataset.hpp"
#include "uavd/tokenizer.hpp"
#include "uavd/validator.hpp"

using namespace uavd;
using uavd::testing::fixture;
using uavd::testing::fixtures;

namespace {

std::set<std::string> codes(const DiagnosticList& d) {
  std::set<std::string> out;
  for (const auto& x : d) out.insert(x.code);
  return out;
}

ValidationReport check_text(std::string_view text, const SdkSchema& s) {
  auto parsed = parse_program(text);
  REQUIRE(parsed.ok());
  return check_calls(parsed.value(), s);
}

}  // namespace

TEST_SUITE("validator") {
  TEST_CASE("parse a well-formed program") {
    auto r = parse_program("import tellopy\ntello.takeoff()\ntello.forward(distance=2.0)\ntello.set_speed(speed=3)\n"
                           "on_error: tello.land()");
    REQUIRE(r.ok());
    const auto& seq = r.value();
    CHECK(seq.import_stmt == "import tellopy");
    CHECK(seq.handle == "tello");
    REQUIRE(seq.calls.size() == 3);
    CHECK(seq.calls[1].args == std::vector<Arg>{{"distance", Literal{2.0}}});
    CHECK(seq.calls[2].args == std::vector<Arg>{{"speed", Literal{3LL}}});
    CHECK(seq.calls[2].source_line == 4);
    REQUIRE(seq.on_error.has_value());
    CHECK(seq.on_error->name == "land");
  }

  TEST_CASE("handle declaration line is accepted") {
    auto r = parse_program("from mavsdk import System\ndrone = System()\ndrone.arm()\ndrone.takeoff()");
    REQUIRE(r.ok());
    CHECK(r.value().ctor == std::optional<std::string>("System"));
    CHECK(r.value().calls.size() == 2);
  }

  TEST_CASE("syntax errors carry codes and locations") {
    auto positional = parse_program("import tellopy\ndrone.forward(2.0)");
    REQUIRE_FALSE(positional.ok());
    CHECK(positional.diagnostics().front().code == "PARSE_POSITIONAL");
    CHECK(positional.diagnostics().front().where.line == 2);

    for (const char* bad : {"", "import tellopy", "tello.takeoff()", "import tellopy\ntello.takeoff(",
                            "import tellopy\ntello.go(a=1, a=2)", "import tellopy\ntello.go(a=)",
                            "import tellopy\non_error: tello.land()\ntello.go()", "import x\na.go()\nb.go()",
                            "import x\nx.go(a=\"open)"}) {
      auto r = parse_program(bad);
      INFO(bad);
      REQUIRE_FALSE(r.ok());
      CHECK(r.diagnostics().front().code == "PARSE_SYNTAX");
    }
  }

  TEST_CASE("parser and printer round trip every corpus program") {
    const Corpus c = build_corpus(fixtures(), GenConfig{});
    for (const auto& t : c.samples) {
      if (t.label != Label::kFeasible) continue;
      auto r = parse_program(t.code);
      REQUIRE(r.ok());
      CHECK(render_program(r.value()) == normalize_whitespace(t.code));
    }
  }

  TEST_CASE("identify_sdk by import line") {
    CHECK(identify_sdk("import tellopy\ntello.takeoff()", fixtures()).sdk_id == std::optional<std::string>("tellopy"));
    auto refusal = identify_sdk(kRefusalLine, fixtures());
    CHECK_FALSE(refusal.sdk_id.has_value());
    CHECK(refusal.reason == SdkMatch::kRefusal);
    auto nomatch = identify_sdk("import djitellopy\nx.go()", fixtures());
    CHECK_FALSE(nomatch.sdk_id.has_value());
    CHECK(nomatch.reason == SdkMatch::kNoMatch);
    for (const auto& s : fixtures())
      CHECK(identify_sdk(s.import_stmt + "\n" + s.handle + ".x()", fixtures()).sdk_id == s.sdk_id);
  }

  TEST_CASE("detect_refusal is exact after trimming") {
    CHECK(detect_refusal(kRefusalLine));
    CHECK(detect_refusal("  Current SDK does not support this function\n"));
    CHECK_FALSE(detect_refusal("Current SDK does not support this function\ntello.land()"));
    CHECK_FALSE(detect_refusal("current SDK does not support this function"));
    CHECK_FALSE(detect_refusal(""));
    for (const auto& p : uavd::testing::fixture_paths())
      CHECK_FALSE(detect_refusal(uavd::testing::read_text(p)));
  }

  TEST_CASE("check_calls codes") {
    const auto& t = fixture("tellopy");
    CHECK(check_text("import tellopy\ntello.takeoff()\ntello.forward(distance=5.0)\ntello.land()", t).clean());

    const double above = std::nextafter(5.0, 6.0);
    CallSequence seq{"import tellopy", "tello", std::nullopt, {Call{"forward", {{"distance", Literal{above}}}, 2}},
                     std::nullopt};
    auto rep = check_calls(seq, t);
    CHECK(codes(rep.diagnostics) == std::set<std::string>{"PARAM_RANGE"});
    CHECK(rep.verdicts.front().function_ok);
    CHECK_FALSE(rep.verdicts.front().params_ok);

    CHECK(codes(check_text("import tellopy\ntello.forward()", t).diagnostics) == std::set<std::string>{"PARAM_MISSING"});
    CHECK(codes(check_text("import tellopy\ntello.forward(distance=2.0, warp=1)", t).diagnostics) ==
          std::set<std::string>{"PARAM_UNKNOWN"});
    CHECK(codes(check_text("import tellopy\ntello.forward(distance=\"far\")", t).diagnostics) ==
          std::set<std::string>{"PARAM_TYPE"});
    CHECK(check_text("import tellopy\ntello.forward(distance=2)", t).clean());  // int literal for a float param

    // a name present in exactly one other fixture
    const auto& m = fixture("mavsdk");
    std::string foreign;
    for (const auto& f : m.functions) {
      int owners = 0;
      for (const auto& s : fixtures()) owners += lookup_function(s, f.name) != nullptr;
      if (owners == 1) {
        foreign = f.name;
        break;
      }
    }
    REQUIRE_FALSE(foreign.empty());
    auto fn = check_text("import tellopy\ntello." + foreign + "()", t);
    CHECK(codes(fn.diagnostics) == std::set<std::string>{"FN_UNKNOWN"});
    CHECK_FALSE(fn.verdicts.front().function_ok);
    CHECK_FALSE(fn.verdicts.front().params_ok);

    auto on_err = check_text("import tellopy\ntello.takeoff()\non_error: tello.teleport()", t);
    CHECK(codes(on_err.diagnostics) == std::set<std::string>{"FN_UNKNOWN"});
    CHECK(on_err.verdicts.back().on_error);

    CHECK(codes(check_text("import olympe\ntello.takeoff()", t).diagnostics).count("IMPORT_MISMATCH") == 1);
    CHECK(codes(check_text("import tellopy\ndrone.takeoff()", t).diagnostics).count("HANDLE_MISMATCH") == 1);
  }

  TEST_CASE("enum and int params") {
    for (const auto& s : fixtures()) {
      for (const auto& f : s.functions) {
        for (const auto& p : f.params) {
          if (p.kind == ParamKind::kEnum) {
            Call ok{f.name, {}, 2}, bad{f.name, {}, 2};
            for (const auto& q : f.params) {
              if (!q.required && q.name != p.name) continue;
              Literal good = q.kind == ParamKind::kEnum ? Literal{q.allowed.front()}
                             : q.kind == ParamKind::kString ? Literal{std::string("x")}
                             : q.kind == ParamKind::kInt ? Literal{static_cast<long long>(q.min.value_or(1))}
                                                         : Literal{q.min.value_or(1.0)};
              ok.args.push_back({q.name, good});
              bad.args.push_back({q.name, q.name == p.name ? Literal{std::string("nope")} : good});
            }
            CallSequence a{s.import_stmt, s.handle, std::nullopt, {ok}, std::nullopt};
            CallSequence b{s.import_stmt, s.handle, std::nullopt, {bad}, std::nullopt};
            CHECK(check_calls(a, s).clean());
            CHECK(codes(check_calls(b, s).diagnostics) == std::set<std::string>{"PARAM_RANGE"});
          }
          if (p.kind == ParamKind::kInt && p.required) {
            Call c{f.name, {}, 2};
            for (const auto& q : f.params)
              if (q.required) c.args.push_back({q.name, q.name == p.name ? Literal{1.5} : Literal{std::string("x")}});
            CallSequence seq{s.import_stmt, s.handle, std::nullopt, {c}, std::nullopt};
            CHECK(codes(check_calls(seq, s).diagnostics).count("PARAM_TYPE") == 1);
          }
        }
      }
    }
  }

  TEST_CASE("validator agrees with the brute-force re-checker on random calls") {
    std::vector<std::string> all_names;
    for (const auto& s : fixtures())
      for (const auto& f : s.functions) all_names.push_back(f.name);
    for (const auto& path : uavd::testing::fixture_paths()) {
      const auto doc = nlohmann::json::parse(uavd::testing::read_text(path));
      const SdkSchema& schema = fixture(doc["sdk_id"].get<std::string>());
      Rng rng = Rng::keyed(1, path.filename().string(), 0);
      for (int i = 0; i < 300; ++i) {
        Call call = uavd::testing::random_call(doc, all_names, rng);
        call.source_line = 2;
        CallSequence seq{schema.import_stmt, schema.handle, std::nullopt, {call}, std::nullopt};
        INFO(render_program(seq));
        auto reparsed = parse_program(render_program(seq));
        REQUIRE(reparsed.ok());
        const auto rep = check_calls(reparsed.value(), schema);
        const auto want = uavd::testing::oracle_check(doc, call);
        CHECK(rep.verdicts.front().function_ok == want.function_ok);
        CHECK(rep.verdicts.front().params_ok == want.params_ok);
        CHECK(codes(rep.diagnostics) == want.codes);
      }
    }
  }
}
