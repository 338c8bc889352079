#include "tek/cpu_mediator.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "gen.h"

namespace tek {
namespace {

using ::tek::testing::Gen;

SchedEntity Entity(Tid tid, GroupName g, Criticality c, int nice = 0) {
  SchedEntity e;
  e.tid = tid;
  e.group = g;
  e.nice = Nice(nice);
  e.criticality = c;
  return e;
}

constexpr Criticality kTc = Criticality::kTimeCritical;
constexpr Criticality kNtc = Criticality::kNonTimeCritical;

class MediatorTest : public ::testing::Test {
 protected:
  MediatorTest() : s_(WeightTable::PaperLinear(), DefaultGroupShares()) {}

  void Admit(Tid tid, GroupName g, Criticality c, int nice = 0) {
    AdmitThread(s_, Entity(tid, g, c, nice));
  }

  std::set<Tid> FastSet() const {
    std::set<Tid> out;
    for (const RegionMember& m : s_.mediator.fast) out.insert(m.tid);
    return out;
  }
  std::set<Tid> LazySet() const {
    std::set<Tid> out;
    for (const RegionMember& m : s_.mediator.lazy) out.insert(m.tid);
    return out;
  }
  std::size_t QueuedInGroups() const {
    std::size_t n = 0;
    for (const SchedGroup& g : s_.groups) n += g.queue.size();
    return n;
  }

  SchedulerState s_;
};

TEST_F(MediatorTest, SetSchedParamErrors) {
  Admit(1, GroupName::kNormal, kNtc);
  try {
    SetSchedParam(s_, 9999, {Policy::kSchedTek, Nice(0)});
    FAIL();
  } catch (const TekError& e) {
    EXPECT_STREQ(e.what(), "no such thread");
  }
  try {
    SetSchedParam(s_, 1, {Policy::kSchedTek, Nice(0)});
    FAIL();
  } catch (const TekError& e) {
    EXPECT_STREQ(e.what(), "criticality mismatch");
  }
  EXPECT_EQ(s_.entity(1).policy, Policy::kSchedNormal);
}

TEST_F(MediatorTest, NormalPolicyChangesNiceOnly) {
  Admit(1, GroupName::kNormal, kNtc);
  EXPECT_EQ(SetSchedParam(s_, 1, {Policy::kSchedNormal, Nice(5)}), std::nullopt);
  EXPECT_EQ(s_.entity(1).nice, Nice(5));
  EXPECT_EQ(s_.entity(1).placement, Placement::kGroup);
  EXPECT_TRUE(s_.mediator.fast.empty());
}

TEST_F(MediatorTest, SchedTekMovesCallerToFast) {
  Admit(1, GroupName::kUrgent, kTc);
  const auto report = SetSchedParam(s_, 1, {Policy::kSchedTek, Nice(0)});
  ASSERT_TRUE(report.has_value());
  EXPECT_EQ(report->fast, std::vector<Tid>{1});
  EXPECT_EQ(s_.entity(1).placement, Placement::kFast);
  EXPECT_EQ(s_.entity(1).policy, Policy::kSchedTek);
}

TEST_F(MediatorTest, TwoCriticalSixOthers) {
  Admit(1, GroupName::kUrgent, kTc);
  Admit(2, GroupName::kUrgent, kTc);
  Tid tid = 3;
  for (GroupName g : kAllGroups) {
    if (g == GroupName::kService) continue;
    Admit(tid++, g, kNtc);
    Admit(tid++, g, kNtc);
  }
  s_.entity(1).policy = Policy::kSchedTek;
  const MigrationReport r = EnterTek(s_, 1);
  EXPECT_EQ(FastSet(), (std::set<Tid>{1, 2}));
  EXPECT_EQ(LazySet(), (std::set<Tid>{3, 4, 5, 6, 7, 8}));
  EXPECT_EQ(r.fast.size(), 2u);
  EXPECT_EQ(r.lazy.size(), 6u);
  EXPECT_EQ(QueuedInGroups(), 0u);
}

TEST_F(MediatorTest, OnlyCallerRunnable) {
  Admit(1, GroupName::kService, kTc);
  s_.entity(1).policy = Policy::kSchedTek;
  EnterTek(s_, 1);
  EXPECT_EQ(FastSet(), std::set<Tid>{1});
  EXPECT_TRUE(LazySet().empty());
}

TEST_F(MediatorTest, NotEligible) {
  Admit(1, GroupName::kUrgent, kNtc);
  Admit(2, GroupName::kUrgent, kTc);
  Admit(3, GroupName::kUrgent, kTc);
  s_.entity(3).policy = Policy::kSchedTek;
  MakeUnrunnable(s_, 3);
  for (Tid tid : {1u, 2u, 3u}) {
    try {
      EnterTek(s_, tid);
      FAIL() << tid;
    } catch (const TekError& e) {
      EXPECT_STREQ(e.what(), "not eligible for SCHED_TEK");
    }
  }
  EXPECT_TRUE(s_.mediator.fast.empty());
}

TEST_F(MediatorTest, CriticalThreadsOfOtherGroupsStayPut) {
  Admit(1, GroupName::kUrgent, kTc);
  Admit(2, GroupName::kNormal, kTc);
  Admit(3, GroupName::kNormal, kNtc);
  s_.entity(1).policy = Policy::kSchedTek;
  EnterTek(s_, 1);
  EXPECT_EQ(FastSet(), std::set<Tid>{1});
  EXPECT_EQ(LazySet(), std::set<Tid>{3});
  EXPECT_EQ(s_.entity(2).placement, Placement::kGroup);
}

// Membership recomputed from scratch: Fast holds every runnable TC thread of
// the episode's groups, Lazy every runnable NTC thread.
void ExpectMembershipFromScratch(const SchedulerState& s) {
  for (const auto& [tid, e] : s.entities) {
    if (e.placement == Placement::kNone) continue;
    const bool tc = e.criticality == Criticality::kTimeCritical;
    if (!tc) {
      EXPECT_EQ(e.placement, Placement::kLazy) << tid;
    } else if (s.mediator.tek_groups.count(e.group) != 0) {
      EXPECT_EQ(e.placement, Placement::kFast) << tid;
    } else {
      EXPECT_EQ(e.placement, Placement::kGroup) << tid;
    }
  }
}

TEST_F(MediatorTest, SecondEnterTekMergesIdempotently) {
  Admit(1, GroupName::kUrgent, kTc);
  Admit(2, GroupName::kNormal, kTc);
  Admit(3, GroupName::kNormal, kNtc);
  Admit(4, GroupName::kService, kNtc);
  s_.entity(1).policy = Policy::kSchedTek;
  s_.entity(2).policy = Policy::kSchedTek;
  EnterTek(s_, 1);
  const std::set<Tid> lazy_before = LazySet();
  const MigrationReport second = EnterTek(s_, 2);
  EXPECT_EQ(second.fast, std::vector<Tid>{2});
  EXPECT_TRUE(second.lazy.empty());
  EXPECT_EQ(LazySet(), lazy_before);
  ExpectMembershipFromScratch(s_);

  const MigrationReport again = EnterTek(s_, 2);
  EXPECT_TRUE(again.fast.empty());
  EXPECT_TRUE(again.lazy.empty());
  EXPECT_EQ(FastSet(), (std::set<Tid>{1, 2}));
  EXPECT_EQ(s_.mediator.episodes, 1u);
}

TEST_F(MediatorTest, MediatorPickMinimumVruntime) {
  EXPECT_EQ(MediatorPick(s_), std::nullopt);
  Admit(1, GroupName::kUrgent, kTc);
  Admit(2, GroupName::kUrgent, kTc);
  AccountRun(s_, 1, 10);
  AccountRun(s_, 2, 5);
  s_.entity(1).policy = Policy::kSchedTek;
  EnterTek(s_, 1);
  EXPECT_EQ(MediatorPick(s_), std::optional<Tid>(2));
  EXPECT_EQ(PickNext(s_), std::optional<Tid>(2));
}

TEST_F(MediatorTest, RestorationWhenFastEmpties) {
  Admit(1, GroupName::kUrgent, kTc);
  for (Tid t = 2; t <= 7; ++t) Admit(t, static_cast<GroupName>(t % 4), kNtc, static_cast<int>(t));
  std::map<Tid, std::tuple<GroupName, Policy, Nice>> before;
  for (const auto& [tid, e] : s_.entities) before[tid] = {e.group, e.policy, e.nice};
  s_.entity(1).policy = Policy::kSchedTek;
  EnterTek(s_, 1);
  ASSERT_EQ(LazySet().size(), 6u);

  EXPECT_EQ(ExitTekIfEmpty(s_), std::nullopt);

  s_.now = 42;
  MakeUnrunnable(s_, 1);  // Fast empties; restoration fires in the same call
  EXPECT_TRUE(s_.mediator.lazy.empty());
  EXPECT_TRUE(s_.mediator.tek_groups.empty());
  for (Tid t = 2; t <= 7; ++t) {
    const SchedEntity& e = s_.entity(t);
    EXPECT_EQ(e.placement, Placement::kGroup);
    EXPECT_EQ(std::make_tuple(e.group, e.policy, e.nice), before[t]);
  }
  EXPECT_EQ(QueuedInGroups(), 6u);
}

TEST_F(MediatorTest, ExitReportListsRestoredThreads) {
  Admit(1, GroupName::kUrgent, kTc);
  Admit(2, GroupName::kNormal, kNtc);
  s_.entity(1).policy = Policy::kSchedTek;
  EnterTek(s_, 1);
  s_.mediator.fast.Unlink(1);
  s_.entity(1).placement = Placement::kNone;
  const auto report = ExitTekIfEmpty(s_);
  ASSERT_TRUE(report.has_value());
  ASSERT_EQ(report->restored.size(), 1u);
  EXPECT_EQ(report->restored[0].tid, 2u);
  EXPECT_EQ(report->restored[0].group, GroupName::kNormal);
}

TEST_F(MediatorTest, StaleVruntimeRestoredToGroupMinimum) {
  Admit(1, GroupName::kUrgent, kTc);
  Admit(2, GroupName::kNormal, kNtc);
  AccountRun(s_, 2, 3);
  s_.entity(1).policy = Policy::kSchedTek;
  EnterTek(s_, 1);
  // Another normal-group thread appears and runs to 900 while 2 is Lazy.
  SchedEntity other = Entity(3, GroupName::kNormal, kTc);
  RegisterThread(s_, other);
  s_.entity(3).vruntime = 900;
  s_.EnqueueInGroup(s_.entity(3));
  MakeUnrunnable(s_, 1);
  EXPECT_EQ(s_.entity(2).vruntime, Rational(900));
}

TEST_F(MediatorTest, WakeDuringEpisodeIsRouted) {
  Admit(1, GroupName::kUrgent, kTc);
  Admit(2, GroupName::kUrgent, kTc);
  Admit(3, GroupName::kNormal, kNtc);
  Admit(4, GroupName::kNormal, kTc);
  MakeUnrunnable(s_, 2);
  MakeUnrunnable(s_, 3);
  MakeUnrunnable(s_, 4);
  s_.entity(1).policy = Policy::kSchedTek;
  EnterTek(s_, 1);
  MakeRunnable(s_, 2);
  MakeRunnable(s_, 3);
  MakeRunnable(s_, 4);
  EXPECT_EQ(s_.entity(2).placement, Placement::kFast);
  EXPECT_EQ(s_.entity(3).placement, Placement::kLazy);
  EXPECT_EQ(s_.entity(4).placement, Placement::kGroup);
}

TEST_F(MediatorTest, BlockedTekThreadStartsEpisodeOnWake) {
  Admit(1, GroupName::kUrgent, kTc);
  Admit(2, GroupName::kNormal, kNtc);
  MakeUnrunnable(s_, 1);
  EXPECT_EQ(SetSchedParam(s_, 1, {Policy::kSchedTek, Nice(0)}), std::nullopt);
  EXPECT_TRUE(s_.mediator.fast.empty());
  MakeRunnable(s_, 1);
  EXPECT_EQ(FastSet(), std::set<Tid>{1});
  EXPECT_EQ(LazySet(), std::set<Tid>{2});
}

TEST_F(MediatorTest, LeavingTekReturnsThreadAndRestores) {
  Admit(1, GroupName::kUrgent, kTc);
  Admit(2, GroupName::kNormal, kNtc);
  SetSchedParam(s_, 1, {Policy::kSchedTek, Nice(0)});
  SetSchedParam(s_, 1, {Policy::kSchedNormal, Nice(0)});
  EXPECT_EQ(s_.entity(1).placement, Placement::kGroup);
  EXPECT_EQ(s_.entity(2).placement, Placement::kGroup);
}

TEST_F(MediatorTest, NiceChangeWhileLazyIsKept) {
  Admit(1, GroupName::kUrgent, kTc);
  Admit(2, GroupName::kNormal, kNtc);
  SetSchedParam(s_, 1, {Policy::kSchedTek, Nice(0)});
  SetSchedParam(s_, 2, {Policy::kSchedNormal, Nice(7)});
  MakeUnrunnable(s_, 1);
  EXPECT_EQ(s_.entity(2).nice, Nice(7));
}

TEST_F(MediatorTest, MaxLazyDelayGrantsOverdueThread) {
  s_.mediator.max_lazy_delay = 5;
  Admit(1, GroupName::kUrgent, kTc);
  Admit(2, GroupName::kNormal, kNtc);
  SetSchedParam(s_, 1, {Policy::kSchedTek, Nice(0)});
  std::vector<Tid> picks;
  for (Tick t = 0; t < 12; ++t) {
    s_.now = t;
    const Tid tid = *PickNext(s_);
    picks.push_back(tid);
    AccountRun(s_, tid, kNsPerTick);
  }
  EXPECT_EQ(std::count(picks.begin(), picks.end(), 2u), 2);
  EXPECT_EQ(picks[5], 2u);
}

TEST_F(MediatorTest, MigrationLogRecordsMoves) {
  s_.now = 17;
  Admit(1, GroupName::kUrgent, kTc);
  Admit(2, GroupName::kNormal, kNtc);
  SetSchedParam(s_, 1, {Policy::kSchedTek, Nice(0)});
  MakeUnrunnable(s_, 1);
  ASSERT_EQ(s_.mediator.log.size(), 3u);
  EXPECT_EQ(s_.mediator.log[0].to, Location::Fast());
  EXPECT_EQ(s_.mediator.log[1].to, Location::Lazy());
  EXPECT_EQ(s_.mediator.log[2].from, Location::Lazy());
  EXPECT_EQ(s_.mediator.log[2].to, Location::InGroup(GroupName::kNormal));
  EXPECT_EQ(s_.mediator.log[2].tick, 17);
}

TEST(RegionTest, LinkUnlinkByTid) {
  Region r(RegionKind::kLazy);
  EXPECT_TRUE(r.Link({1, GroupName::kNormal}));
  EXPECT_TRUE(r.Link({2, GroupName::kService}));
  EXPECT_FALSE(r.Link({1, GroupName::kUrgent}));
  EXPECT_TRUE(r.Contains(2));
  EXPECT_EQ(r.Find(2)->origin, GroupName::kService);
  EXPECT_EQ(r.Unlink(1)->tid, 1u);
  EXPECT_EQ(r.Unlink(1), std::nullopt);
  EXPECT_EQ(r.size(), 1u);
}

// Random admit/block/wake/tek/pick sequences; checks exclusivity, strict delay
// and conservation.
TEST(MediatorProperty, ExclusivityStrictDelayConservation) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    Gen g(seed);
    SchedulerState s(WeightTable::PaperLinear(), DefaultGroupShares());
    std::map<Tid, std::tuple<GroupName, Policy, Nice>> original;
    Tid next = 1;
    for (int step = 0; step < 400; ++step) {
      s.now = step;
      const auto op = g.Int(0, 9);
      if (op <= 1 || s.entities.empty()) {
        const Criticality c = g.Chance(1, 3) ? kTc : kNtc;
        AdmitThread(s, Entity(next, g.Group(), c, g.Nice()));
        original[next] = {s.entity(next).group, Policy::kSchedNormal, s.entity(next).nice};
        ++next;
      } else if (op == 2) {
        auto it = s.entities.begin();
        std::advance(it, g.Int(0, static_cast<std::int64_t>(s.entities.size()) - 1));
        if (it->second.placement == Placement::kNone) {
          MakeRunnable(s, it->first);
        } else {
          MakeUnrunnable(s, it->first);
        }
      } else if (op == 3) {
        std::vector<Tid> eligible;
        for (const auto& [tid, e] : s.entities) {
          if (e.criticality == kTc && e.placement != Placement::kNone) eligible.push_back(tid);
        }
        if (!eligible.empty()) {
          const Tid tid = g.Pick(eligible);
          SetSchedParam(s, tid, {Policy::kSchedTek, s.entity(tid).nice});
          std::get<1>(original[tid]) = Policy::kSchedTek;
        }
      } else {
        const bool fast_nonempty = !s.mediator.fast.empty();
        const std::optional<Tid> tid = PickNext(s);
        if (tid) {
          if (fast_nonempty && !s.mediator.max_lazy_delay) {
            EXPECT_EQ(s.entity(*tid).placement, Placement::kFast) << "seed " << seed;
          }
          AccountRun(s, *tid, kNsPerTick);
        }
        ExitTekIfEmpty(s);
      }

      for (const auto& [tid, e] : s.entities) {
        const int where = (s.mediator.fast.Contains(tid) ? 1 : 0) +
                          (s.mediator.lazy.Contains(tid) ? 1 : 0) +
                          (s.group(e.group).queue.Erase({e.vruntime, tid}) ? 1 : 0);
        if (e.placement == Placement::kGroup) s.group(e.group).queue.Insert({e.vruntime, tid});
        EXPECT_EQ(where, e.placement == Placement::kNone ? 0 : 1) << "seed " << seed;
      }
      if (s.mediator.fast.empty()) {
        EXPECT_TRUE(s.mediator.lazy.empty()) << "seed " << seed;
      }
    }
    // Drain Fast; every thread is back with its original triple.
    std::vector<Tid> fast;
    for (const RegionMember& m : s.mediator.fast) fast.push_back(m.tid);
    for (Tid tid : fast) MakeUnrunnable(s, tid);
    EXPECT_TRUE(s.mediator.lazy.empty());
    for (const auto& [tid, e] : s.entities) {
      EXPECT_EQ(std::make_tuple(e.group, e.policy, e.nice), original[tid]) << "seed " << seed;
      EXPECT_NE(e.placement, Placement::kLazy);
    }
  }
}

}  // namespace
}  // namespace tek
