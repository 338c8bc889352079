#include "tek/region.h"

namespace tek {

bool Region::Link(RegionMember member) {
  if (Contains(member.tid)) return false;
  const Tid tid = member.tid;
  members_.push_back(std::move(member));
  index_.emplace(tid, std::prev(members_.end()));
  return true;
}

std::optional<RegionMember> Region::Unlink(Tid tid) {
  auto it = index_.find(tid);
  if (it == index_.end()) return std::nullopt;
  RegionMember member = std::move(*it->second);
  members_.erase(it->second);
  index_.erase(it);
  return member;
}

const RegionMember* Region::Find(Tid tid) const {
  auto it = index_.find(tid);
  return it == index_.end() ? nullptr : &*it->second;
}

RegionMember* Region::Find(Tid tid) {
  auto it = index_.find(tid);
  return it == index_.end() ? nullptr : &*it->second;
}

std::string Location::ToString() const {
  switch (kind) {
    case Kind::kGroup: return std::string(tek::ToString(group));
    case Kind::kFast: return "fast";
    case Kind::kLazy: return "lazy";
  }
  return "?";
}

}  // namespace tek
