#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "grace/backend.hpp"
#include "grace/common.hpp"

#include "json.hpp"

namespace grace {

// --- Textual LLVM IR analysis -------------------------------------------
//
// Instruction counting works on the textual IR emitted by `opt -S`: a line
// inside a function body counts as an instruction unless it is blank, a
// comment, or a label. This avoids parsing `-stats` output, whose format
// varies across LLVM versions.

namespace ir {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool is_label_line(const std::string& line) {
  // "entry:", "42:", "bb.loop:" optionally followed by a comment.
  std::size_t colon = line.find(':');
  if (colon == std::string::npos || colon == 0) return false;
  for (std::size_t i = 0; i < colon; ++i) {
    char c = line[i];
    bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
              c == '_' || c == '$' || c == '-' || c == '"' || c == '%';
    if (!ok) return false;
  }
  std::string rest = trim(line.substr(colon + 1));
  return rest.empty() || rest[0] == ';';
}

inline std::string opcode_of(const std::string& line) {
  std::istringstream in(line);
  std::string tok;
  in >> tok;
  if (tok.empty()) return tok;
  if (tok[0] == '%' || tok[0] == '"') {
    // Quoted result names may contain spaces; consume up to the closing quote.
    if (tok[0] == '"' && (tok.size() < 2 || tok.back() != '"')) {
      std::string part;
      while (in >> part) {
        tok += " " + part;
        if (!part.empty() && part.back() == '"') break;
      }
    }
    std::string eq;
    in >> eq;  // "="
    in >> tok;
  }
  while (tok == "tail" || tok == "musttail" || tok == "notail") in >> tok;
  return tok;
}

// The 14 textual-IR counters used as a compact stand-in for the Autophase
// feature set. Order:
//   0 total instructions   1 basic blocks   2 functions
//   3 br    4 ret    5 call    6 load    7 store    8 phi
//   9 icmp  10 alloca  11 getelementptr  12 add/sub family
//   13 total operands (comma-separated operand fields per instruction)
inline constexpr std::size_t kLlvmFeatureDim = 14;

struct ModuleStats {
  std::int64_t instructions = 0;
  FeatureVector features = FeatureVector(kLlvmFeatureDim, 0.0);
};

inline ModuleStats analyze_ir_text(std::istream& in) {
  ModuleStats stats;
  auto& f = stats.features;
  std::string raw;
  bool in_body = false;
  // The entry block may or may not carry an explicit label; count it lazily
  // at the first body line so labeled entries are not counted twice.
  bool entry_pending = false;
  while (std::getline(in, raw)) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == ';') continue;
    if (!in_body) {
      if (line.rfind("define", 0) == 0 && line.find('{') != std::string::npos) {
        in_body = true;
        entry_pending = true;
        f[2] += 1;  // functions
      }
      continue;
    }
    if (line == "}") {
      in_body = false;
      continue;
    }
    if (is_label_line(line)) {
      f[1] += 1;
      entry_pending = false;
      continue;
    }
    if (entry_pending) {
      f[1] += 1;  // unlabeled entry block
      entry_pending = false;
    }
    stats.instructions += 1;
    f[0] += 1;
    std::string op = opcode_of(line);
    if (op == "br") f[3] += 1;
    else if (op == "ret") f[4] += 1;
    else if (op == "call" || op == "invoke") f[5] += 1;
    else if (op == "load") f[6] += 1;
    else if (op == "store") f[7] += 1;
    else if (op == "phi") f[8] += 1;
    else if (op == "icmp") f[9] += 1;
    else if (op == "alloca") f[10] += 1;
    else if (op == "getelementptr") f[11] += 1;
    else if (op == "add" || op == "fadd" || op == "sub" || op == "fsub")
      f[12] += 1;
    // Operand field count: commas + 1 per instruction.
    f[13] += 1 + std::count(line.begin(), line.end(), ',');
  }
  return stats;
}

inline ModuleStats analyze_ir_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GraceError("cannot open IR file: " + path.string());
  return analyze_ir_text(in);
}

}  // namespace ir

// --- opt driver -----------------------------------------------------------

// Drives the external `opt` tool:
//   $GRACE_OPT_BIN <pass flags...> -S <input.ll> -o <tmp.ll>
// Each call uses its own temp file, so concurrent workers never collide.
class LlvmBackend : public Backend {
public:
  LlvmBackend(std::vector<PassId> pass_list, std::string opt_bin = "",
              int timeout_s = 60)
      : timeout_s_(timeout_s) {
    if (opt_bin.empty()) {
      const char* env = std::getenv("GRACE_OPT_BIN");
      opt_bin = env ? env : "opt";
    }
    opt_bin_ = std::move(opt_bin);
    for (auto& id : pass_list) {
      if (id.empty()) continue;
      if (std::find(universe_.begin(), universe_.end(), id) == universe_.end())
        universe_.push_back(id);
    }
    if (universe_.empty())
      throw GraceError("llvm backend: empty pass universe");
    oz_seq_ = PassSequence{{"-Oz"}};
  }

  static std::vector<PassId> read_pass_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw GraceError("cannot open pass list: " + path.string());
    std::vector<PassId> out;
    std::string line;
    while (std::getline(in, line)) {
      line = ir::trim(line);
      if (!line.empty() && line[0] != '#') out.push_back(line);
    }
    return out;
  }

  // Manifest: {"programs": [{"id": "...", "path": "prog.ll"}, ...]}
  std::vector<ProgramHandle> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw GraceError("cannot open manifest: " + path.string());
    nlohmann::json j;
    in >> j;
    std::vector<ProgramHandle> out;
    for (const auto& e : j.at("programs")) {
      ProgramHandle h;
      h.id = e.at("id").get<std::string>();
      h.source = e.at("path").get<std::string>();
      h.baseline_count = ir::analyze_ir_file(h.source).instructions;
      h.oz_count = oz_count(h);
      out.push_back(std::move(h));
    }
    return out;
  }

  std::string name() const override { return "llvm"; }
  const std::vector<PassId>& pass_universe() const override { return universe_; }
  const PassSequence& oz_sequence() const override { return oz_seq_; }
  std::size_t feature_dim() const override { return ir::kLlvmFeatureDim; }

  FeatureVector extract_features(const ProgramHandle& p) const override {
    return ir::analyze_ir_file(p.source).features;
  }

  std::optional<FeatureVector> features_after(
      const ProgramHandle& p, const PassSequence& seq) const override {
    auto tmp = make_temp_path();
    auto status = run_opt(p.source, seq, tmp);
    if (status != EvalStatus::ok) {
      std::filesystem::remove(tmp);
      return std::nullopt;
    }
    FeatureVector f = ir::analyze_ir_file(tmp).features;
    std::filesystem::remove(tmp);
    return f;
  }

protected:
  CountResult count_impl(const ProgramHandle& p,
                         const PassSequence& seq) const override {
    if (seq.empty())
      return {EvalStatus::ok, ir::analyze_ir_file(p.source).instructions};
    auto tmp = make_temp_path();
    auto status = run_opt(p.source, seq, tmp);
    if (status != EvalStatus::ok) {
      std::filesystem::remove(tmp);
      return {status, 0};
    }
    std::int64_t count = ir::analyze_ir_file(tmp).instructions;
    std::filesystem::remove(tmp);
    return {EvalStatus::ok, count};
  }

private:
  std::filesystem::path make_temp_path() const {
    static std::atomic<std::uint64_t> counter{0};
    std::uint64_t n = counter.fetch_add(1);
    return std::filesystem::temp_directory_path() /
           ("grace_opt_" + std::to_string(::getpid()) + "_" +
            std::to_string(n) + ".ll");
  }

  EvalStatus run_opt(const std::string& input, const PassSequence& seq,
                     const std::filesystem::path& output) const {
    std::string cmd = "timeout " + std::to_string(timeout_s_) + " '" +
                      opt_bin_ + "'";
    for (const auto& flag : seq.passes) cmd += " " + flag;
    cmd += " -S '" + input + "' -o '" + output.string() +
           "' >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    if (rc == -1) return EvalStatus::compile_error;
    int exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : 1;
    if (exit_code == 124) return EvalStatus::timeout;
    return exit_code == 0 ? EvalStatus::ok : EvalStatus::compile_error;
  }

  std::string opt_bin_;
  int timeout_s_;
  std::vector<PassId> universe_;
  PassSequence oz_seq_;
};

}  // namespace grace
