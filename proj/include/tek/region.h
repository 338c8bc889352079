#ifndef TEK_REGION_H_
#define TEK_REGION_H_

#include <cstdint>
#include <list>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "tek/rational.h"
#include "tek/types.h"

namespace tek {

enum class RegionKind : std::uint8_t { kFast, kLazy };

// Saved origin state of a thread parked in a mediator region.
struct RegionMember {
  Tid tid = 0;
  GroupName origin = GroupName::kNormal;
  Policy saved_policy = Policy::kSchedNormal;
  int saved_nice = 0;
  Rational saved_vruntime;
};

// Doubly-linked list of members with an index by tid, so link and unlink are
// O(1).
class Region {
 public:
  explicit Region(RegionKind kind) : kind_(kind) {}

  RegionKind kind() const { return kind_; }

  // Returns false if the tid is already linked.
  bool Link(RegionMember member);
  std::optional<RegionMember> Unlink(Tid tid);

  bool Contains(Tid tid) const { return index_.count(tid) != 0; }
  const RegionMember* Find(Tid tid) const;
  RegionMember* Find(Tid tid);

  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }

  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }

 private:
  RegionKind kind_;
  std::list<RegionMember> members_;
  std::unordered_map<Tid, std::list<RegionMember>::iterator> index_;
};

// Where a thread sits from the scheduler's point of view.
struct Location {
  enum class Kind : std::uint8_t { kGroup, kFast, kLazy } kind = Kind::kGroup;
  GroupName group = GroupName::kNormal;

  static Location InGroup(GroupName g) { return {Kind::kGroup, g}; }
  static Location Fast() { return {Kind::kFast, GroupName::kNormal}; }
  static Location Lazy() { return {Kind::kLazy, GroupName::kNormal}; }

  std::string ToString() const;
  friend bool operator==(const Location&, const Location&) = default;
};

// One line of the migration event log.
struct MigrationRecord {
  Tick tick = 0;
  Tid tid = 0;
  Location from;
  Location to;
};

struct MediatorState {
  Region fast{RegionKind::kFast};
  Region lazy{RegionKind::kLazy};
  // Groups whose time-critical threads have been pulled into Fast during the
  // current episode.
  std::set<GroupName> tek_groups;
  // Longest a Lazy thread may wait before it is granted one tick. Disabled
  // when unset.
  std::optional<Tick> max_lazy_delay;
  std::vector<MigrationRecord> log;
  std::uint64_t episodes = 0;
};

}  // namespace tek

#endif  // TEK_REGION_H_
