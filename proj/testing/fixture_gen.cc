// Copyright 2026 The crashgym Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fixture_gen.h"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "crashgym/apr_agents.h"
#include "crashgym/campaign.h"
#include "crashgym/crash_report.h"
#include "crashgym/error.h"
#include "crashgym/localization.h"
#include "crashgym/sim_executor.h"
#include "crashgym/util.h"

namespace crashgym::fixtures {
namespace fs = std::filesystem;

namespace {

struct Subsystem {
  std::string_view dir;
  std::string_view prefix;
};

constexpr Subsystem kSubsystems[] = {
    {"net/sched", "tcf"},        {"fs/ext4", "ext4"},
    {"drivers/usb/core", "usb"}, {"sound/core", "snd"},
    {"net/bluetooth", "hci"},    {"drivers/media/usb/uvc", "uvc"},
    {"fs/ntfs3", "ntfs"},        {"net/netfilter", "nft"},
};

constexpr std::string_view kWords[] = {"ring", "attr", "node",  "slot", "chan", "frag",
                                       "map",  "queue", "rule", "desc", "ctl"};

std::string Hex40(const std::string &seed) { return Sha256Hex(seed).substr(0, 40); }

std::string Fmt(const char *fmt, long long a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, a);
  return buf;
}

std::string BugId(int i) { return Fmt("bug-%03lld", i); }

std::string Upper(std::string s) {
  for (auto &c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

int LineOf(const std::string &text, std::string_view marker, size_t from = 0) {
  size_t pos = text.find(marker, from);
  if (pos == std::string::npos) throw Error(ErrorCode::kInternal, "fixture marker missing");
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + pos, '\n'));
}

struct Unit {
  std::string stem;
  std::string prefix;
  std::string file;
  std::string header;
  std::string source;
  std::string header_text;
};

Unit MakeUnit(int i) {
  const Subsystem &sub = kSubsystems[i % std::size(kSubsystems)];
  Unit u;
  u.prefix = std::string(sub.prefix);
  u.stem = u.prefix + "_" + std::string(kWords[i % std::size(kWords)]) + std::to_string(i);
  u.file = std::string(sub.dir) + "/" + std::string(kWords[i % std::size(kWords)]) +
           std::to_string(i) + ".c";
  u.header = "include/linux/" + u.stem + ".h";
  const std::string &s = u.stem;
  std::string S = Upper(s);
  u.source =
      "// SPDX-License-Identifier: GPL-2.0\n"
      "/*\n"
      " * " + s + ": table driven control unit { see the header }\n"
      " */\n"
      "#include <linux/kernel.h>\n"
      "#include <linux/slab.h>\n"
      "#include <linux/" + s + ".h>\n"
      "\n"
      "#define " + S + "_MAX 16\n"
      "#define " + S + "_CHECK(x) do {\t\\\n"
      "\t\tif (!(x))\t\t\\\n"
      "\t\t\treturn -EINVAL;\t\\\n"
      "\t} while (0)\n"
      "\n"
      "struct " + s + "_ctx {\n"
      "\tunsigned int len;\n"
      "\tu32 table[" + S + "_MAX];\n"
      "\tstruct " + s + "_ctx *next;\n"
      "};\n"
      "\n"
      "static const char " + s + "_banner[] = \"" + s + ": ready {\";\n"
      "\n"
      "static void " + u.prefix + "_release(struct " + s + "_ctx *ctx)\n"
      "{\n"
      "\tkfree(ctx->next);\n"
      "\tkfree(ctx);\n"
      "}\n"
      "\n"
      "static int " + s + "_lookup(struct " + s + "_ctx *ctx,\n"
      "\t\t\tunsigned int idx)\n"
      "{\n"
      "\t/* idx comes straight from user space */\n"
      "\treturn ctx->table[idx];\n"
      "}\n"
      "\n"
      "int\n" +
      s + "_parse(struct " + s + "_ctx *ctx, const u8 *buf, size_t len)\n"
      "{\n"
      "\tint ret;\n"
      "\n"
      "\tif (len < 2)\n"
      "\t\treturn -EINVAL;\n"
      "\tret = " + s + "_lookup(ctx, buf[0]);\n"
      "\tif (buf[1] == '}')\n"
      "\t\t" + u.prefix + "_release(ctx);\n"
      "\treturn ret;\n"
      "}\n"
      "\n"
      "long " + s + "_ioctl(struct file *file, unsigned int cmd, unsigned long arg)\n"
      "{\n"
      "\tstruct " + s + "_ctx *ctx = file->private_data;\n"
      "\tu8 buf[2] = { 0, 0 };\n"
      "\n"
      "\tif (!ctx) {\n"
      "\t\tctx = kzalloc(sizeof(*ctx), GFP_KERNEL);\n"
      "\t\tif (!ctx)\n"
      "\t\t\treturn -ENOMEM;\n"
      "\t\tfile->private_data = ctx;\n"
      "\t}\n"
      "\tif (copy_from_user(buf, (void __user *)arg, sizeof(buf)))\n"
      "\t\treturn -EFAULT;\n"
      "\treturn " + s + "_parse(ctx, buf, sizeof(buf));\n"
      "}\n"
      "\n"
      "static const struct file_operations " + s + "_fops = {\n"
      "\t.owner = THIS_MODULE,\n"
      "\t.unlocked_ioctl = " + s + "_ioctl,\n"
      "};\n";
  u.header_text =
      "/* SPDX-License-Identifier: GPL-2.0 */\n"
      "#ifndef _LINUX_" + S + "_H\n"
      "#define _LINUX_" + S + "_H\n"
      "\n"
      "struct " + s + "_ctx;\n"
      "struct file;\n"
      "\n"
      "int " + s + "_parse(struct " + s + "_ctx *ctx, const u8 *buf, size_t len);\n"
      "long " + s + "_ioctl(struct file *file, unsigned int cmd, unsigned long arg);\n"
      "int " + s + "_reset(struct " + s + "_ctx *ctx);\n"
      "\n"
      "static inline bool " + s + "_valid(const struct " + s + "_ctx *ctx)\n"
      "{\n"
      "\treturn ctx != NULL;\n"
      "}\n"
      "\n"
      "#endif /* _LINUX_" + S + "_H */\n";
  return u;
}

BugType TypeOf(int i) {
  switch (i % 3) {
    case 0: return BugType::kOob;
    case 1: return BugType::kUaf;
    default: return BugType::kNpd;
  }
}

std::string KasanKind(int i) {
  switch (TypeOf(i)) {
    case BugType::kOob: {
      constexpr std::string_view kinds[] = {"slab-out-of-bounds", "global-out-of-bounds",
                                            "stack-out-of-bounds"};
      return std::string(kinds[(i / 3) % 3]);
    }
    case BugType::kUaf: return (i / 3) % 2 ? "use-after-free" : "slab-use-after-free";
    default: return "null-ptr-deref";
  }
}

std::string Report(int i, const Unit &u) {
  int lookup = LineOf(u.source, "\treturn ctx->table[idx];");
  int parse = LineOf(u.source, "\tret = " + u.stem + "_lookup(");
  int ioctl = LineOf(u.source, "\treturn " + u.stem + "_parse(");
  int alloc = LineOf(u.source, "\t\tctx = kzalloc(");
  int release = LineOf(u.source, "\tkfree(ctx);");
  int freed_in = LineOf(u.source, "\t\t" + u.prefix + "_release(ctx);");
  std::string access = i % 2 ? "Write" : "Read";
  std::string kind = KasanKind(i);
  int pid = 3000 + i * 7;
  std::string task = "syz-executor." + std::to_string(i % 4);
  std::string addr = TypeOf(i) == BugType::kNpd ? "0000000000000008" : Fmt("ffff88801c7a%04llx", 0x1e00 + i);
  long long t = 80 + i;
  std::string out;
  int n = 0;
  auto line = [&](const std::string &text) {
    out += Fmt("[%5lld.", t) + Fmt("%06lld]", 100000 + 3 * n++) + Fmt("[ T%lld] ", pid) + text + "\n";
  };
  auto frame = [&](const std::string &fn, const std::string &loc, bool inl) {
    line(" " + fn + (inl ? "" : Fmt("+0x%llx", 0x20 + (fn.size() * 7) % 0x200) +
                                     Fmt("/0x%llx", 0x240 + (fn.size() * 13) % 0x300)) +
         " " + loc + (inl ? " [inline]" : ""));
  };
  std::string f = u.file + ":";
  line("==================================================================");
  line("BUG: KASAN: " + kind + " in " + u.stem + "_lookup+0x3c/0x70 " + f + std::to_string(lookup));
  line(access + " of size 4 at addr " + addr + " by task " + task + "/" + std::to_string(pid));
  line("");
  line("CPU: " + std::to_string(i % 2) + " PID: " + std::to_string(pid) + " Comm: " + task +
       " Not tainted 6." + std::to_string(i % 6 + 1) + ".0-syzkaller #0");
  line("Hardware name: QEMU Standard PC (i440FX + PIIX, 1996), BIOS 1.16.2-debian-1.16.2-1 04/01/2014");
  line("Call Trace:");
  line(" <TASK>");
  frame("__dump_stack", "lib/dump_stack.c:88", true);
  frame("dump_stack_lvl", "lib/dump_stack.c:106", false);
  frame("print_address_description", "mm/kasan/report.c:364", true);
  frame("print_report", "mm/kasan/report.c:475", false);
  frame("kasan_report", "mm/kasan/report.c:588", false);
  frame(u.stem + "_lookup", f + std::to_string(lookup), true);
  frame(u.stem + "_parse", f + std::to_string(parse), false);
  frame(u.stem + "_ioctl", f + std::to_string(ioctl), false);
  frame("vfs_ioctl", "fs/ioctl.c:51", true);
  frame("__do_sys_ioctl", "fs/ioctl.c:871", true);
  frame("__se_sys_ioctl", "fs/ioctl.c:857", true);
  frame("__x64_sys_ioctl", "fs/ioctl.c:857", false);
  frame("do_syscall_x64", "arch/x86/entry/common.c:50", true);
  frame("do_syscall_64", "arch/x86/entry/common.c:80", false);
  line(" entry_SYSCALL_64_after_hwframe+0x63/0xcd");
  line("RIP: 0033:0x7f3b8e27cae9");
  line("RSP: 002b:00007ffc6a1b3f28 EFLAGS: 00000246 ORIG_RAX: 0000000000000010");
  line(" </TASK>");
  line("");
  if (TypeOf(i) == BugType::kUaf) {
    line("Allocated by task " + std::to_string(pid) + ":");
    frame("kasan_save_stack", "mm/kasan/common.c:45", false);
    frame("kasan_set_track", "mm/kasan/common.c:52", false);
    frame("____kasan_kmalloc", "mm/kasan/common.c:374", true);
    frame("__kasan_kmalloc", "mm/kasan/common.c:383", false);
    frame("kmalloc", "include/linux/slab.h:600", true);
    frame("kzalloc", "include/linux/slab.h:721", true);
    frame(u.stem + "_ioctl", f + std::to_string(alloc), false);
    frame("__x64_sys_ioctl", "fs/ioctl.c:857", false);
    frame("do_syscall_64", "arch/x86/entry/common.c:80", false);
    line(" entry_SYSCALL_64_after_hwframe+0x63/0xcd");
    line("");
    line("Freed by task " + std::to_string(pid) + ":");
    frame("kasan_save_stack", "mm/kasan/common.c:45", false);
    frame("kasan_set_track", "mm/kasan/common.c:52", false);
    frame("kasan_save_free_info", "mm/kasan/generic.c:522", false);
    frame("____kasan_slab_free", "mm/kasan/common.c:236", true);
    frame("__kasan_slab_free", "mm/kasan/common.c:244", false);
    frame("__kmem_cache_free", "mm/slub.c:3826", false);
    frame(u.prefix + "_release", f + std::to_string(release), false);
    frame(u.stem + "_parse", f + std::to_string(freed_in), false);
    frame(u.stem + "_ioctl", f + std::to_string(ioctl), false);
    frame("__x64_sys_ioctl", "fs/ioctl.c:857", false);
    line(" entry_SYSCALL_64_after_hwframe+0x63/0xcd");
    line("");
  }
  if (TypeOf(i) != BugType::kNpd) {
    line("The buggy address belongs to the object at ffff88801c7a1e00");
    line(" which belongs to the cache kmalloc-96 of size 96");
    line("The buggy address is located " + std::to_string(64 + i % 8 * 4) +
         " bytes inside of");
    line(" 96-byte region [ffff88801c7a1e00, ffff88801c7a1e60)");
    line("");
    line("Memory state around the buggy address:");
    line(" ffff88801c7a1d00: fa fb fb fb fb fb fb fb fb fb fb fb fc fc fc fc");
    line(">ffff88801c7a1e00: 00 00 00 00 00 00 00 00 fc fc fc fc fc fc fc fc");
    line("                                            ^");
  }
  line("==================================================================");
  return out;
}

std::string BicDiff(const Unit &u) {
  int open = LineOf(u.source, "static int " + u.stem + "_lookup(") + 2;
  std::string S = Upper(u.stem);
  return "commit " + Hex40("bic-commit" + u.stem) + "\n"
         "Author: Kernel Developer <dev@example.org>\n"
         "\n"
         "    " + u.prefix + ": drop redundant index check in " + u.stem + "_lookup\n"
         "\n"
         "diff --git a/" + u.file + " b/" + u.file + "\n"
         "index 3f2a1c0..8e41b7d 100644\n"
         "--- a/" + u.file + "\n"
         "+++ b/" + u.file + "\n"
         "@@ -" + std::to_string(open) + ",6 +" + std::to_string(open) + ",4 @@ static int " +
         u.stem + "_lookup(struct " + u.stem + "_ctx *ctx,\n"
         " {\n"
         " \t/* idx comes straight from user space */\n"
         "-\tif (idx >= " + S + "_MAX)\n"
         "-\t\treturn -EINVAL;\n"
         " \treturn ctx->table[idx];\n"
         " }\n";
}

std::string Config(int i) {
  bool clang = i % 4 == 3;
  std::string cc = clang ? "Debian clang version 15.0.6" : "gcc (Debian 12.2.0-14) 12.2.0";
  return "#\n"
         "# Automatically generated file; DO NOT EDIT.\n"
         "# Linux/x86 6." + std::to_string(i % 6 + 1) + ".0 Kernel Configuration\n"
         "#\n"
         "CONFIG_CC_VERSION_TEXT=\"" + cc + "\"\n" +
         (clang ? "CONFIG_CC_IS_CLANG=y\n" : "CONFIG_CC_IS_GCC=y\n") +
         "CONFIG_KASAN=y\n"
         "CONFIG_KASAN_GENERIC=y\n"
         "CONFIG_KASAN_INLINE=y\n"
         "CONFIG_DEBUG_INFO=y\n";
}

std::string ReproSyz(const Unit &u, int i) {
  return "# " + u.stem + " reproducer\n"
         "r0 = openat$dev(0xffffffffffffff9c, &(0x7f0000000000)='/dev/" + u.stem +
         "\\x00', 0x2, 0x0)\n"
         "ioctl$DEV(r0, 0xc0045401, &(0x7f0000000040)=\"" + Fmt("%02llx", 16 + i % 200) +
         "00\")\n";
}

std::string ReproC(const Unit &u, int i) {
  return "// autogenerated by syzkaller\n"
         "#include <fcntl.h>\n"
         "#include <stdint.h>\n"
         "#include <sys/ioctl.h>\n"
         "\n"
         "int main(void)\n"
         "{\n"
         "\tuint8_t buf[2] = {" + std::to_string(16 + i % 200) + ", 0};\n"
         "\tint fd = open(\"/dev/" + u.stem + "\", O_RDWR);\n"
         "\tioctl(fd, 0xc0045401, buf);\n"
         "\treturn 0;\n"
         "}\n";
}

}  // namespace

std::vector<BugRecord> WriteCorpus(const fs::path &corpus, const fs::path &tree, int n) {
  std::vector<BugRecord> out;
  for (int i = 0; i < n; ++i) {
    Unit u = MakeUnit(i);
    WriteFile(tree / u.file, u.source);
    WriteFile(tree / u.header, u.header_text);
    BugRecord r;
    r.bug_id = BugId(i);
    r.bug_type = TypeOf(i);
    r.title = "KASAN: " + KasanKind(i) + " " + (i % 2 ? "Write" : "Read") + " in " +
              u.stem + "_lookup";
    r.fix_commit = Hex40("fix" + r.bug_id);
    r.parent_commit = Hex40("parent" + r.bug_id);
    r.kernel_config = Config(i);
    r.compiler_hint = i % 4 == 3 ? "clang 15.0.6" : "gcc 12.2.0";
    r.repro_syz = ReproSyz(u, i);
    if (i % 2 == 0) r.repro_c = ReproC(u, i);
    r.crash_report = Report(i, u);
    r.nondeterministic = i % 3 == 1;
    if (i % 7 != 6) {
      r.bic = Hex40("bic" + r.bug_id);
      r.bic_diff = BicDiff(u);
    }
    WriteBug(corpus, r);
    out.push_back(std::move(r));
  }
  return out;
}

std::string ScriptedReplacement(const std::string &original, int attempt) {
  std::vector<std::string_view> lines = SplitLines(original);
  std::string out;
  bool inserted = false;
  for (auto l : lines) {
    out += std::string(l) + "\n";
    if (!inserted && !l.empty() && l.back() == '{') {
      out += "\t/* reject out-of-range input (attempt " + std::to_string(attempt) + ") */\n";
      out += "\tif (!ctx)\n\t\treturn -EINVAL;\n";
      inserted = true;
    }
  }
  if (!out.empty()) out.pop_back();
  return out;
}

namespace {

int AttemptFromOpening(const std::string &opening) {
  int attempt = 1;
  for (auto l : SplitLines(opening)) {
    if (StartsWith(l, "Attempt ") && Contains(l, " failed: ")) ++attempt;
  }
  return attempt;
}

std::vector<std::string> TopCandidates(const std::string &opening, size_t k) {
  std::vector<std::string> out;
  bool on = false;
  for (auto l : SplitLines(opening)) {
    if (l == kStackCandidatesHeader) {
      on = true;
      continue;
    }
    if (!on) continue;
    if (l.empty() || StartsWith(l, "==")) break;
    size_t dot = l.find(". ");
    if (dot == std::string_view::npos) continue;
    std::string_view rest = l.substr(dot + 2);
    out.emplace_back(rest.substr(0, rest.find(' ')));
    if (out.size() == k) break;
  }
  return out;
}

}  // namespace

ChatResponse ScriptedModel(const ChatRequest &request) {
  const auto &msgs = request.messages;
  if (msgs.size() < 2) throw Error(ErrorCode::kValidation, "scripted model: short request");
  std::string reply;
  if (StartsWith(msgs[0].content, "You explain why")) {
    // Quote the first compiler error, else the first line.
    std::string first, error;
    bool fence = false;
    for (auto l : SplitLines(msgs[1].content)) {
      if (StartsWith(l, "```")) {
        if (fence) break;
        fence = true;
        continue;
      }
      if (!fence) continue;
      std::string_view t = Trim(l);
      size_t close = t.find("] ");
      if (!t.empty() && t.front() == '[' && close != std::string_view::npos) t = Trim(t.substr(close + 2));
      if (t.empty() || StartsWith(t, "=====")) continue;
      if (first.empty()) first = std::string(t);
      if (Contains(t, "error:")) {
        error = std::string(t);
        break;
      }
    }
    if (!error.empty()) first = error;
    reply = "The patch did not hold: " + (first.empty() ? std::string("no log") : first) + ".";
  } else if (msgs.size() == 2) {
    reply = "The access stack points at the lookup helper.\n\n" + std::string(kCandidateMarker) +
            "\n" + Join(TopCandidates(msgs[1].content, 2), "\n") + "\n";
  } else {
    int attempt = AttemptFromOpening(msgs[1].content);
    auto fns = ParsePatchedFunctions(msgs.back().content);
    if (fns.empty()) throw Error(ErrorCode::kValidation, "scripted model: no definitions shown");
    const PatchedFunction &fn = fns.front();
    reply = "Bound the index before using it.\n\n" + std::string(kFunctionMarker) + " " +
            fn.name + "\n" + (fn.file ? std::string(kFileMarker) + " " + *fn.file + "\n" : "") +
            "```c\n" + ScriptedReplacement(fn.text, attempt) + "\n```\n";
  }
  size_t prompt = 0;
  for (const auto &m : msgs) prompt += m.content.size();
  return {{Role::kAssistant, reply},
          {static_cast<int64_t>(prompt / 4), static_cast<int64_t>(reply.size() / 4)}};
}

std::string PredictedPatch(const SourceTree &tree, const BugRecord &record, int attempt) {
  CrashReport report = ParseReport(record.crash_report);
  LocalizationContext ctx = BuildContext(record, report, record.bic_diff);
  const StackCandidate &top = ctx.stack_candidates.front();
  FunctionDef def = LocateFunction(tree, top.function, FileHintFor(ctx, top.function)).front();
  FunctionEdit edit{def, ScriptedReplacement(def.text, attempt)};
  return SynthesizePatch(tree, record.parent_commit, {edit}).diff;
}

std::string EndToEndSimScript(const SourceTree &tree, const std::vector<BugRecord> &bugs) {
  // Outcome tokens per attempt; unlisted attempts fall through to the
  // wildcard rule (reproducer still triggers everywhere).
  const std::vector<std::vector<std::string>> patterns = {
      {"build=ok repro=pass"},
      {"build=ok repro=trigger:all", "build=ok repro=pass"},
      {"build=compile_error diag=error: 'ctx' undeclared (first use in this function)",
       "build=ok repro=trigger:2", "build=ok repro=pass"},
      {},
      {"build=timeout", "build=ok repro=different:all", "build=ok repro=bootfail:all"},
  };
  std::string out =
      "# End-to-end fixture: outcomes keyed by bug and patch digest.\n"
      "* baseline build=ok repro=trigger:all\n"
      "* * build=ok repro=trigger:all\n";
  for (size_t j = 0; j < bugs.size(); ++j) {
    const auto &tokens = patterns[j % patterns.size()];
    for (size_t a = 0; a < tokens.size(); ++a) {
      std::string key = SimulatedExecutor::PatchKey(
          PredictedPatch(tree, bugs[j], static_cast<int>(a) + 1));
      out += bugs[j].bug_id + " " + key + " " + tokens[a] + "\n";
    }
  }
  return out;
}

void WriteEndToEnd(const fs::path &root) {
  fs::create_directories(root);
  std::vector<BugRecord> bugs = WriteCorpus(root / "corpus", root / "tree");
  bugs.resize(kEndToEndBugs);
  SourceTree tree(root / "tree");
  WriteFile(root / "sim.script", EndToEndSimScript(tree, bugs));
  WriteFile(root / "run.conf",
            "# Replayable SimpleAgent campaign over the first " + std::to_string(kEndToEndBugs) +
                " fixture bugs.\n"
                "run_id: e2e\n"
                "dataset: corpus\n"
                "tree: tree\n"
                "output: out\n"
                "executor: simulated\n"
                "sim_script: sim.script\n"
                "provider: replay\n"
                "cassette: cassette.jsonl\n"
                "agent: simple\n"
                "model: gpt-4o\n"
                "max_attempts: 3\n"
                "seed: 7\n"
                "vm_count: 4\n"
                "workers: 4\n"
                "limit: " + std::to_string(kEndToEndBugs) + "\n");
  fs::remove(root / "cassette.jsonl");
  RunManifest m = LoadRunManifest(root / "run.conf");
  m.output = root / ".record";
  fs::remove_all(m.output);
  auto cassette = std::make_shared<Cassette>(root / "cassette.jsonl");
  auto provider = std::make_shared<RecordingProvider>(
      std::make_shared<CallbackProvider>(ScriptedModel), cassette);
  RunCampaign(m, nullptr, provider);
  fs::remove_all(m.output);
}

namespace {

std::vector<int> Range(int lo, int hi) {  // inclusive
  std::vector<int> v(hi - lo + 1);
  std::iota(v.begin(), v.end(), lo);
  return v;
}

std::vector<int> Concat(std::initializer_list<std::vector<int>> parts) {
  std::vector<int> out;
  for (const auto &p : parts) out.insert(out.end(), p.begin(), p.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Hands out failed-attempt records in a fixed order of outcome classes.
class FailurePool {
 public:
  explicit FailurePool(const LedgerRow &row)
      : trigger_(row.trigger), nondet_(row.nondet), boot_(row.boot_fail),
        other_(row.other), compile_(row.compile_fails), bad_(row.bad_patches) {}

  AttemptRecord Next(int index) {
    AttemptRecord a;
    a.index = index;
    a.usage = {1000, 250};
    if (trigger_ > 0) {
      --trigger_;
      a.build = "Success";
      a.repro = ReproClass::kTriggered;
      if (nondet_ > 0) {
        --nondet_;
        a.nondet = true;
      }
    } else if (boot_ > 0) {
      --boot_;
      a.build = "Success";
      a.repro = ReproClass::kBootFail;
    } else if (other_ > 0) {
      --other_;
      a.build = "Success";
      a.repro = ReproClass::kOther;
    } else if (compile_ > 0) {
      --compile_;
      a.build = "CompileError";
    } else if (bad_ > 0) {
      --bad_;
      a.build = "BadPatch";
    } else {
      a.agent_error = "ProtocolViolation: turn 2: no FUNCTION blocks";
    }
    return a;
  }

 private:
  int trigger_, nondet_, boot_, other_, compile_, bad_;
};

}  // namespace

std::vector<LedgerRow> ReferenceLedgerRows() {
  std::vector<LedgerRow> rows;
  auto add = [&](std::string dir, std::string setup, std::string model, std::vector<int> solved,
                 int trigger, int nondet, int boot, int other, int compile, int bad,
                 std::string cost) {
    LedgerRow r;
    r.dir = std::move(dir);
    r.setup = std::move(setup);
    r.model = std::move(model);
    r.solved = std::move(solved);
    r.trigger = trigger;
    r.nondet = nondet;
    r.boot_fail = boot;
    r.other = other;
    r.compile_fails = compile;
    r.bad_patches = bad;
    r.avg_cost = std::move(cost);
    rows.push_back(std::move(r));
    return &rows.back();
  };
  add("kgym-oracle-gpt-4-turbo", "kGym-oracle", "GPT-4-turbo", Range(0, 1),
      36, 18, 1, 0, 4, 63, "0.21");
  add("kgym-oracle-gpt-4o", "kGym-oracle", "GPT-4o", Range(0, 3), 44, 27, 0, 1, 2, 55, "0.05");
  add("kgym-oracle-functionwise-gpt-4o", "kGym-oracle+functionwise", "GPT-4o",
      Concat({Range(80, 89), Range(0, 4)}), 61, 32, 1, 1, 16, 13, "0.06");
  add("simple-nobic-gpt-4o", "SimpleAgent-nobic", "GPT-4o",
      Concat({Range(78, 97), Range(0, 4)}), 85, 57, 5, 0, 26, 2, "0.05");
  add("simple-gpt-4o", "SimpleAgent", "GPT-4o", Concat({Range(0, 27), Range(75, 77)}),
      77, 60, 4, 0, 24, 7, "0.08");
  LedgerRow *fb = add("simple-feedback-gpt-4o", "SimpleAgent+Feedback", "GPT-4o",
                      Concat({Range(0, 43), Range(65, 74)}), 78, 64, 9, 0, 41, 7, "0.17");
  fb->max_attempts = 3;
  for (size_t k = 0; k < fb->solved.size(); ++k) {
    fb->solved_at.push_back(k < 34 ? 1 : k < 42 ? 2 : 3);
  }
  add("exploration-gpt-4o", "ExplorationAgent", "GPT-4o",
      Concat({Range(0, 9), Range(65, 74), Range(78, 79)}), 87, 65, 2, 0, 24, 8, "0.12");
  add("simple-claude-opus-4.1", "SimpleAgent", "Claude Opus 4.1",
      Concat({Range(0, 42), Range(62, 64)}), 73, 64, 1, 0, 15, 8, "0.73");
  add("simple-gpt-5-thinking", "SimpleAgent", "GPT-5 Thinking", Range(0, 61),
      60, 60, 0, 0, 15, 6, "0.18");
  return rows;
}

std::vector<BugResult> LedgerResults(const LedgerRow &row, int n) {
  FailurePool pool(row);
  std::vector<BugResult> out;
  std::map<int, int> solved_at;
  for (size_t k = 0; k < row.solved.size(); ++k) {
    solved_at[row.solved[k]] = row.solved_at.empty() ? 1 : row.solved_at[k];
  }
  for (int i = 0; i < n; ++i) {
    BugResult r;
    r.bug_id = BugId(i);
    r.setup = row.setup;
    r.model = row.model;
    r.max_attempts = row.max_attempts;
    auto it = solved_at.find(i);
    int failures = it == solved_at.end() ? row.max_attempts : it->second - 1;
    for (int a = 1; a <= failures; ++a) r.attempts.push_back(pool.Next(a));
    if (it != solved_at.end()) {
      AttemptRecord pass;
      pass.index = it->second;
      pass.build = "Success";
      pass.repro = ReproClass::kPass;
      pass.usage = {1000, 250};
      r.attempts.push_back(pass);
      r.solved = true;
    }
    for (const auto &a : r.attempts) r.usage += a.usage;
    r.cost = Usd::Parse(row.avg_cost);
    out.push_back(std::move(r));
  }
  return out;
}

void WriteReferenceLedger(const fs::path &root) {
  for (const auto &row : ReferenceLedgerRows()) {
    std::string text;
    for (const auto &r : LedgerResults(row)) text += DumpJson(ToJson(r)) + "\n";
    WriteFile(root / row.dir / "results.jsonl", text);
  }
}

namespace {

std::string RandomBody(std::mt19937_64 &rng, int depth = 1) {
  std::string indent(depth, '\t');
  std::uniform_int_distribution<int> pick(0, 5);
  std::uniform_int_distribution<int> num(1, 999);
  int lines = 1 + static_cast<int>(rng() % 5);
  std::string out;
  for (int k = 0; k < lines; ++k) {
    switch (pick(rng)) {
      case 0: out += indent + "x += " + std::to_string(num(rng)) + ";\n"; break;
      case 1:
        out += indent + "if (x > " + std::to_string(num(rng)) + ") {\n" + indent +
               "\tx = " + std::to_string(num(rng)) + ";\n" + indent + "}\n";
        break;
      case 2: out += indent + "/* keep { this } balanced */\n"; break;
      case 3: out += indent + "pr_debug(\"value %d }\\n\", x);\n"; break;
      case 4: out += indent + "x = x * 3 + '{';\n"; break;
      default:
        out += indent + "for (i = 0; i < " + std::to_string(num(rng) % 16 + 1) +
               "; i++)\n" + indent + "\tx ^= i;\n";
        break;
    }
  }
  return out;
}

}  // namespace

SyntheticTree RandomTree(std::mt19937_64 &rng, int files, int functions_per_file) {
  SyntheticTree tree;
  for (int f = 0; f < files; ++f) {
    std::string path = "lib/unit" + std::to_string(f) + ".c";
    std::string text = "// SPDX-License-Identifier: GPL-2.0\n#include <linux/kernel.h>\n\n";
    for (int k = 0; k < functions_per_file; ++k) {
      std::string name = "fn" + std::to_string(f) + "_" + std::to_string(k);
      std::string body = "\tint i, x = 0;\n\n" + RandomBody(rng) + "\treturn x;\n";
      std::string def;
      switch (rng() % 5) {
        case 0: def = "static int " + name + "(int a, int b)\n{\n" + body + "}"; break;
        case 1:
          def = "int\n" + name + "(struct device *dev,\n\t\tunsigned long flags)\n{\n" + body + "}";
          break;
        case 2: def = "static inline int " + name + "(void) {\n" + body + "}"; break;
        case 3:
          def = "unsigned long " + name + "(const char *s)\n{\n\tconst char *p = \"{ not a brace\";\n" +
                body + "}";
          break;
        default:
          text += "/* " + name + "() { helper } */\n";
          def = "static long " + name + "(long v) /* trailing } */\n{\n" + body + "}";
          break;
      }
      text += def + "\n\n";
      tree.functions.push_back({path, name, def});
      switch (rng() % 4) {
        case 0: text += "int " + name + "_hook(int);\n\n"; break;
        case 1: text += "#define " + name + "_M(x) { (x) }\n\n"; break;
        case 2: text += "static int " + name + "_tbl[] = { 1, 2, 3 };\n\n"; break;
        default: break;
      }
    }
    tree.files[path] = text;
  }
  return tree;
}

void WriteTree(const fs::path &root, const SyntheticTree &tree) {
  for (const auto &[path, text] : tree.files) WriteFile(root / path, text);
}

}  // namespace crashgym::fixtures
