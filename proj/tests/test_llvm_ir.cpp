#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "grace/llvm_backend.hpp"

using namespace grace;

namespace {
const std::filesystem::path kFixtures = GRACE_TEST_FIXTURE_DIR;
}

TEST_CASE("trim") {
  CHECK(ir::trim("  add i32 \t") == "add i32");
  CHECK(ir::trim("\r\n") == "");
  CHECK(ir::trim("") == "");
  CHECK(ir::trim("x") == "x");
}

TEST_CASE("label line recognition") {
  CHECK(ir::is_label_line("entry:"));
  CHECK(ir::is_label_line("42:"));
  CHECK(ir::is_label_line("bb.loop_1:"));
  CHECK(ir::is_label_line("then:      ; preds = %entry"));
  CHECK_FALSE(ir::is_label_line("br label %exit"));
  CHECK_FALSE(ir::is_label_line("store i32 5, ptr %x"));
  CHECK_FALSE(ir::is_label_line(": nothing"));
  CHECK_FALSE(ir::is_label_line("call void @f(i32 1)"));
}

TEST_CASE("opcode extraction") {
  CHECK(ir::opcode_of("ret void") == "ret");
  CHECK(ir::opcode_of("%x = add i32 %a, %b") == "add");
  CHECK(ir::opcode_of("%c = tail call i32 @f()") == "call");
  CHECK(ir::opcode_of("musttail call void @g()") == "call");
  CHECK(ir::opcode_of("\"odd name\" = load i32, ptr %p") == "load");
}

TEST_CASE("hand-counted module statistics") {
  // All values tallied by hand from fixtures/sample.ll.
  auto stats = ir::analyze_ir_file(kFixtures / "sample.ll");
  CHECK(stats.instructions == 13);
  REQUIRE(stats.features.size() == ir::kLlvmFeatureDim);
  CHECK(stats.features[0] == 13);  // instructions
  CHECK(stats.features[1] == 5);   // blocks
  CHECK(stats.features[2] == 2);   // functions
  CHECK(stats.features[3] == 3);   // br
  CHECK(stats.features[4] == 2);   // ret
  CHECK(stats.features[5] == 1);   // call
  CHECK(stats.features[6] == 1);   // load
  CHECK(stats.features[7] == 1);   // store
  CHECK(stats.features[8] == 1);   // phi
  CHECK(stats.features[9] == 1);   // icmp
  CHECK(stats.features[10] == 1);  // alloca
  CHECK(stats.features[11] == 0);  // getelementptr
  CHECK(stats.features[12] == 2);  // add/sub family
  CHECK(stats.features[13] == 28); // operand fields
}

TEST_CASE("unlabeled entry blocks are still counted once") {
  std::istringstream in(
      "define void @f() {\n"
      "  ret void\n"
      "}\n");
  auto stats = ir::analyze_ir_text(in);
  CHECK(stats.features[1] == 1);
  CHECK(stats.instructions == 1);

  std::istringstream labeled(
      "define void @f() {\n"
      "entry:\n"
      "  ret void\n"
      "}\n");
  CHECK(ir::analyze_ir_text(labeled).features[1] == 1);
}

TEST_CASE("module-level lines are ignored") {
  std::istringstream in(
      "@g = global i32 0\n"
      "declare void @ext()\n"
      "!0 = !{i32 1}\n");
  auto stats = ir::analyze_ir_text(in);
  CHECK(stats.instructions == 0);
  CHECK(stats.features[2] == 0);
}

TEST_CASE("pass list parsing skips blanks and comments") {
  auto passes = LlvmBackend::read_pass_list(kFixtures / "passes.txt");
  CHECK(passes.size() == 6);
  CHECK(passes.front() == "-instcombine");
  CHECK(passes.back() == "-mem2reg");
  CHECK_THROWS_AS(LlvmBackend::read_pass_list(kFixtures / "no_such_file"),
                  GraceError);
}

TEST_CASE("backend construction") {
  CHECK_THROWS_AS(LlvmBackend({}, "opt"), GraceError);
  LlvmBackend b({"-a", "-b", "-a"}, "opt");  // duplicates collapse
  CHECK(b.pass_universe().size() == 2);
  CHECK(b.oz_sequence() == PassSequence{{"-Oz"}});
  CHECK(b.feature_dim() == ir::kLlvmFeatureDim);
}

TEST_CASE("opt round trip" * doctest::skip(std::getenv("GRACE_OPT_BIN") == nullptr)) {
  // Exercised only when GRACE_OPT_BIN points at a real opt binary.
  LlvmBackend b(LlvmBackend::read_pass_list(kFixtures / "passes.txt"));

  auto manifest = std::filesystem::temp_directory_path() / "grace_manifest.json";
  {
    std::ofstream out(manifest);
    out << R"({"programs": [{"id": "sample", "path": ")"
        << (kFixtures / "sample.ll").string() << R"("}]})";
  }
  auto corpus = b.load_manifest(manifest);
  std::filesystem::remove(manifest);
  REQUIRE(corpus.size() == 1);
  const auto& p = corpus[0];
  CHECK(p.baseline_count == 13);
  CHECK(p.oz_count > 0);

  // a real pass pipeline must parse and not increase the count wildly
  auto r = b.instruction_count(p, PassSequence{{"-mem2reg", "-instcombine"}});
  CHECK(r.ok());
  CHECK(r.count <= p.baseline_count);
  // bogus flag is a compile error, not a crash
  CHECK(b.instruction_count(p, PassSequence{{"-definitely-not-a-pass"}}).status ==
        EvalStatus::compile_error);
  // features after a pass are still the right shape
  auto f = b.features_after(p, PassSequence{{"-mem2reg"}});
  REQUIRE(f.has_value());
  CHECK(f->size() == ir::kLlvmFeatureDim);
}
