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

#include "crashgym/crash_report.h"

#include <gtest/gtest.h>

#include "crashgym/bug_dataset.h"
#include "crashgym/error.h"
#include "crashgym/util.h"
#include "oracles.h"

namespace crashgym {
namespace {

const std::filesystem::path kReports =
    std::filesystem::path(CRASHGYM_SOURCE_DIR) / "testing/reports";

TEST(CrashReport, LabeledReportsMatch) {
  auto labels = oracle::LoadLabels(kReports);
  ASSERT_GE(labels.size(), 10u);
  for (const auto &l : labels) {
    SCOPED_TRACE(l.file);
    CrashReport r = ParseReport(ReadFile(kReports / l.file));
    EXPECT_EQ(r.title, l.title);
    EXPECT_EQ(BugTypeName(ClassifyReport(r)), l.bug_type);
    EXPECT_EQ(Signature(r).top_frames, l.top_frames);
  }
}

TEST(CrashReport, AllocAndFreeStacks) {
  CrashReport r = ParseReport(ReadFile(kReports / "05-sched-slab-uaf.txt"));
  ASSERT_TRUE(r.alloc_stack.has_value());
  ASSERT_TRUE(r.free_stack.has_value());
  EXPECT_EQ(r.sanitizer, Sanitizer::kKasan);
  // The free stack stops at the next section header.
  EXPECT_EQ(r.free_stack->back().function, "__do_softirq");
  bool has_qdisc_alloc = false;
  for (const auto &f : *r.alloc_stack) has_qdisc_alloc |= f.function == "qdisc_alloc";
  EXPECT_TRUE(has_qdisc_alloc);

  CrashReport oob = ParseReport(ReadFile(kReports / "07-hfsplus-stack-oob.txt"));
  EXPECT_FALSE(oob.alloc_stack.has_value());
  EXPECT_FALSE(oob.free_stack.has_value());
}

TEST(CrashReport, FrameLineForms) {
  auto f = ParseFrameLine(" tcf_chain0_head_change.isra.0+0xb9/0x120 net/sched/cls_api.c:509");
  ASSERT_TRUE(f);
  EXPECT_EQ(f->function, "tcf_chain0_head_change");
  EXPECT_EQ(f->offset, "+0xb9/0x120");
  EXPECT_EQ(f->file, "net/sched/cls_api.c");
  EXPECT_EQ(f->line, 509);
  EXPECT_FALSE(f->inlined);

  f = ParseFrameLine(" hci_event_func net/bluetooth/hci_event.c:7512 [inline]");
  ASSERT_TRUE(f);
  EXPECT_TRUE(f->inlined);
  EXPECT_FALSE(f->offset);

  f = ParseFrameLine(" [<ffffffff81240b53>] lock_acquire+0x1c3/0x3f0 kernel/locking/lockdep.c:3756");
  ASSERT_TRUE(f);
  EXPECT_EQ(f->function, "lock_acquire");

  f = ParseFrameLine(" entry_SYSCALL_64_after_hwframe+0x63/0xcd");
  ASSERT_TRUE(f);
  EXPECT_FALSE(f->file);

  f = ParseFrameLine(" nft_do_chain+0x3a/0x100 [nf_tables]");
  ASSERT_TRUE(f);
  EXPECT_EQ(f->function, "nft_do_chain");

  EXPECT_FALSE(ParseFrameLine("Call Trace:"));
  EXPECT_FALSE(ParseFrameLine(" <TASK>"));
  EXPECT_FALSE(ParseFrameLine(" just words here"));
}

TEST(CrashReport, NoHeaderThrows) {
  try {
    ParseReport("Linux version 6.1\nsyzkaller login:\nall good\n");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoSanitizerHeader);
  }
}

TEST(CrashReport, KasanWithoutStackThrows) {
  try {
    ParseReport("BUG: KASAN: use-after-free in foo+0x1/0x2 a.c:1\nRead of size 8\n");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyAccessStack);
  }
}

TEST(CrashReport, NormalizeTitleIsIdempotent) {
  const char *titles[] = {
      "KASAN: use-after-free Read in foo",
      "BUG: unable to handle page fault for address ffff888012345678",
      "WARNING: CPU: 1 PID: 4242 at fs/x.c:10 bar+0x10/0x20",
      "[  12.345678] task 77 stuck at 12:01:02",
  };
  for (const char *t : titles) {
    std::string once = NormalizeTitle(t);
    EXPECT_EQ(NormalizeTitle(once), once) << t;
  }
  EXPECT_EQ(NormalizeTitle("general protection fault in f addr 0xdead0000"),
            "general protection fault in f addr ADDR");
  EXPECT_EQ(NormalizeTitle("hung task pid 123"), NormalizeTitle("hung task pid 456"));
}

TEST(CrashReport, SameCrashUsesTitleAndFrames) {
  CrashReport a = ParseReport(ReadFile(kReports / "01-hci-slab-oob.txt"));
  CrashReport b = ParseReport(ReadFile(kReports / "01-hci-slab-oob.txt"));
  EXPECT_TRUE(SameCrash(Signature(a), Signature(b)));
  b.access_stack.erase(b.access_stack.begin() + 5);  // first real frame
  EXPECT_FALSE(SameCrash(Signature(a), Signature(b)));
  CrashReport c = ParseReport(ReadFile(kReports / "09-tipc-irq-noise.txt"));
  EXPECT_FALSE(SameCrash(Signature(a), Signature(c)));
}

TEST(CrashReport, SignatureSkipsSanitizerFrames) {
  EXPECT_TRUE(IsSanitizerFrame("kasan_report"));
  EXPECT_TRUE(IsSanitizerFrame("__asan_load8"));
  EXPECT_TRUE(IsSanitizerFrame("dump_stack_lvl"));
  EXPECT_FALSE(IsSanitizerFrame("hci_rx_work"));
  CrashReport r = ParseReport(ReadFile(kReports / "10-oldstyle-lockdep-uaf.txt"));
  EXPECT_EQ(Signature(r, 1).top_frames, std::vector<std::string>{"__lock_acquire"});
  EXPECT_EQ(Signature(r, 5).top_frames.size(), 5u);
}

TEST(CrashReport, ConsolePrefixesStripped) {
  std::string plain = ReadFile(kReports / "01-hci-slab-oob.txt");
  std::string prefixed;
  int n = 0;
  for (auto line : SplitLines(plain)) {
    prefixed += "[  " + std::to_string(100 + n) + ".000001][ T5112] " +
                std::string(line) + "\n";
    ++n;
  }
  CrashReport a = ParseReport(plain);
  CrashReport b = ParseReport(prefixed);
  EXPECT_EQ(a.title, b.title);
  EXPECT_EQ(a.access_stack, b.access_stack);
}

TEST(CrashReport, ClassifyReportUsesRangeHint) {
  CrashReport gpf = ParseReport(ReadFile(kReports / "03-nft-gpf-null.txt"));
  EXPECT_EQ(ClassifyBugType(gpf.title), BugType::kOther);
  EXPECT_EQ(ClassifyReport(gpf), BugType::kNpd);
  CrashReport warn = ParseReport(ReadFile(kReports / "12-mac80211-warning.txt"));
  EXPECT_EQ(ClassifyReport(warn), BugType::kOther);
}

}  // namespace
}  // namespace crashgym
