#include "tek/thread_registry.h"

#include <algorithm>
#include <cstring>
#include <mutex>
#include <sstream>

namespace tek {

namespace {

template <typename T>
void PutLe(std::byte* out, T value) {
  auto v = static_cast<std::uint64_t>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out[i] = static_cast<std::byte>((v >> (8 * i)) & 0xFF);
  }
}

template <typename T>
T GetLe(const std::byte* in) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(in[i])) << (8 * i);
  }
  return static_cast<T>(v);
}

std::array<char, kRoleBytes> PackRole(std::string_view role) {
  std::array<char, kRoleBytes> out{};
  const std::string truncated = TruncateRole(role);
  std::memcpy(out.data(), truncated.data(), truncated.size());
  return out;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

}  // namespace

std::string ThreadInfoRecord::RoleString() const {
  std::size_t n = 0;
  while (n < role.size() && role[n] != '\0') ++n;
  return std::string(role.data(), n);
}

RecordBytes Serialize(const ThreadInfoRecord& r) {
  RecordBytes out{};
  PutLe<std::uint32_t>(&out[0], r.tid);
  PutLe<std::uint8_t>(&out[4], r.policy);
  PutLe<std::uint8_t>(&out[5], static_cast<std::uint8_t>(r.priority));
  PutLe<std::uint8_t>(&out[6], r.criticality);
  PutLe<std::uint8_t>(&out[7], r.zone);
  PutLe<std::uint64_t>(&out[8], r.creation_time_ns);
  PutLe<std::uint32_t>(&out[16], r.stack_reserved_kib);
  PutLe<std::uint32_t>(&out[20], r.vm_kib);
  PutLe<std::uint32_t>(&out[24], r.peak_stack_kib);
  std::memcpy(&out[28], r.role.data(), kRoleBytes);
  return out;
}

ThreadInfoRecord Deserialize(std::span<const std::byte, kRecordBytes> b) {
  ThreadInfoRecord r;
  r.tid = GetLe<std::uint32_t>(&b[0]);
  r.policy = GetLe<std::uint8_t>(&b[4]);
  r.priority = static_cast<std::int8_t>(GetLe<std::uint8_t>(&b[5]));
  r.criticality = GetLe<std::uint8_t>(&b[6]);
  r.zone = GetLe<std::uint8_t>(&b[7]);
  r.creation_time_ns = GetLe<std::uint64_t>(&b[8]);
  r.stack_reserved_kib = GetLe<std::uint32_t>(&b[16]);
  r.vm_kib = GetLe<std::uint32_t>(&b[20]);
  r.peak_stack_kib = GetLe<std::uint32_t>(&b[24]);
  std::memcpy(r.role.data(), &b[28], kRoleBytes);
  return r;
}

std::string TruncateRole(std::string_view role) {
  if (role.size() <= kRoleBytes) return std::string(role);
  std::size_t n = kRoleBytes;
  // Back off while the first dropped byte continues a multi-byte sequence.
  while (n > 0 && (static_cast<unsigned char>(role[n]) & 0xC0) == 0x80) --n;
  return std::string(role.substr(0, n));
}

ThreadInformationTable::ThreadInformationTable()
    : mu_(std::make_unique<std::shared_mutex>()) {}

ThreadInfoRecord ThreadInformationTable::Register(Tid tid,
                                                  const ThreadAttributes& attrs,
                                                  std::uint64_t now_ns) {
  std::unique_lock lock(*mu_);
  if (records_.count(tid) != 0) Fail(ErrorCode::kThreadExists);
  ThreadInfoRecord r;
  r.tid = tid;
  r.policy = static_cast<std::uint8_t>(attrs.policy);
  r.priority = static_cast<std::int8_t>(attrs.priority.value());
  r.criticality = static_cast<std::uint8_t>(attrs.criticality);
  r.creation_time_ns = now_ns;
  r.stack_reserved_kib = attrs.stack_reserved_kib;
  r.vm_kib = attrs.vm_kib;
  r.role = PackRole(attrs.role);
  records_.emplace(tid, r);
  IndexRole(tid, r.RoleString());
  return r;
}

void ThreadInformationTable::SetAttributes(Tid tid, const AttributeUpdate& update) {
  std::unique_lock lock(*mu_);
  auto it = records_.find(tid);
  if (it == records_.end()) Fail(ErrorCode::kNoSuchThread);
  ThreadInfoRecord& r = it->second;
  if (update.criticality &&
      r.criticality != static_cast<std::uint8_t>(Criticality::kUnset)) {
    Fail(ErrorCode::kCriticalityImmutable);
  }
  if (sink_) sink_(tid, update);

  if (update.role) {
    UnindexRole(tid, r.RoleString());
    r.role = PackRole(*update.role);
    IndexRole(tid, r.RoleString());
  }
  if (update.criticality) r.criticality = static_cast<std::uint8_t>(*update.criticality);
  if (update.policy) r.policy = static_cast<std::uint8_t>(*update.policy);
  if (update.priority) r.priority = static_cast<std::int8_t>(update.priority->value());
}

ThreadInfoRecord ThreadInformationTable::GetAttributes(Tid tid) const {
  std::shared_lock lock(*mu_);
  auto it = records_.find(tid);
  if (it == records_.end()) Fail(ErrorCode::kNoSuchThread);
  return it->second;
}

std::vector<Tid> ThreadInformationTable::LookupByRole(std::string_view role) const {
  std::shared_lock lock(*mu_);
  auto it = role_index_.find(TruncateRole(role));
  if (it == role_index_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

void ThreadInformationTable::Freeze(Tid tid) {
  std::unique_lock lock(*mu_);
  if (records_.count(tid) == 0) Fail(ErrorCode::kNoSuchThread);
  frozen_.insert(tid);
}

bool ThreadInformationTable::IsFrozen(Tid tid) const {
  std::shared_lock lock(*mu_);
  return frozen_.count(tid) != 0;
}

std::size_t ThreadInformationTable::ApplyStats(std::span<const ThreadStats> stats) {
  std::unique_lock lock(*mu_);
  std::size_t touched = 0;
  for (const ThreadStats& s : stats) {
    auto it = records_.find(s.tid);
    if (it == records_.end() || frozen_.count(s.tid) != 0) continue;
    ThreadInfoRecord& r = it->second;
    r.policy = static_cast<std::uint8_t>(s.policy);
    r.priority = static_cast<std::int8_t>(s.priority.value());
    r.stack_reserved_kib = s.stack_reserved_kib;
    r.vm_kib = s.vm_kib;
    r.peak_stack_kib = s.peak_stack_kib;
    if (s.zone != Zone::kUnknown) r.zone = static_cast<std::uint8_t>(s.zone);
    ++touched;
  }
  return touched;
}

std::size_t ThreadInformationTable::size() const {
  std::shared_lock lock(*mu_);
  return records_.size();
}

std::vector<std::byte> ThreadInformationTable::DumpBinary() const {
  std::shared_lock lock(*mu_);
  std::vector<std::byte> out(8 + records_.size() * kRecordBytes);
  PutLe<std::uint64_t>(out.data(), records_.size());
  std::size_t offset = 8;
  for (const ThreadInfoRecord* rp : SortedRecords()) {
    const ThreadInfoRecord& r = *rp;
    const RecordBytes bytes = Serialize(r);
    std::memcpy(out.data() + offset, bytes.data(), kRecordBytes);
    offset += kRecordBytes;
  }
  return out;
}

ThreadInformationTable ThreadInformationTable::LoadBinary(std::span<const std::byte> data) {
  if (data.size() < 8) Fail(ErrorCode::kInvalidArgument, "table dump shorter than its header");
  const auto count = GetLe<std::uint64_t>(data.data());
  if ((data.size() - 8) / kRecordBytes != count || (data.size() - 8) % kRecordBytes != 0) {
    Fail(ErrorCode::kInvalidArgument, "table dump length does not match its record count");
  }
  ThreadInformationTable table;
  for (std::uint64_t i = 0; i < count; ++i) {
    const ThreadInfoRecord r = Deserialize(
        data.subspan(8 + i * kRecordBytes).first<kRecordBytes>());
    if (!table.records_.emplace(r.tid, r).second) Fail(ErrorCode::kThreadExists);
    table.IndexRole(r.tid, r.RoleString());
  }
  return table;
}

std::string ThreadInformationTable::DumpCsv() const {
  std::shared_lock lock(*mu_);
  std::ostringstream out;
  out << kTableCsvHeader << '\n';
  for (const ThreadInfoRecord* rp : SortedRecords()) {
    const ThreadInfoRecord& r = *rp;
    out << r.tid << ',' << ToString(static_cast<Policy>(r.policy)) << ','
        << static_cast<int>(r.priority) << ','
        << ToString(static_cast<Criticality>(r.criticality)) << ','
        << ToString(static_cast<Zone>(r.zone)) << ',' << r.creation_time_ns << ','
        << r.stack_reserved_kib << ',' << r.vm_kib << ',' << r.peak_stack_kib << ','
        << CsvField(r.RoleString()) << '\n';
  }
  return out.str();
}

std::vector<ThreadInfoRecord> ThreadInformationTable::Snapshot() const {
  std::shared_lock lock(*mu_);
  std::vector<ThreadInfoRecord> out;
  out.reserve(records_.size());
  for (const ThreadInfoRecord* r : SortedRecords()) out.push_back(*r);
  return out;
}

std::map<std::string, std::set<Tid>> ThreadInformationTable::role_index() const {
  std::shared_lock lock(*mu_);
  return role_index_;
}

std::map<std::string, std::set<Tid>> ThreadInformationTable::RebuildRoleIndex() const {
  std::shared_lock lock(*mu_);
  std::map<std::string, std::set<Tid>> index;
  for (const auto& [tid, r] : records_) index[r.RoleString()].insert(tid);
  return index;
}

std::vector<const ThreadInfoRecord*> ThreadInformationTable::SortedRecords() const {
  std::vector<const ThreadInfoRecord*> out;
  out.reserve(records_.size());
  for (const auto& [tid, r] : records_) out.push_back(&r);
  std::sort(out.begin(), out.end(), [](const ThreadInfoRecord* a, const ThreadInfoRecord* b) {
    return a->tid < b->tid;
  });
  return out;
}

void ThreadInformationTable::IndexRole(Tid tid, const std::string& role) {
  role_index_[role].insert(tid);
}

void ThreadInformationTable::UnindexRole(Tid tid, const std::string& role) {
  auto it = role_index_.find(role);
  if (it == role_index_.end()) return;
  it->second.erase(tid);
  if (it->second.empty()) role_index_.erase(it);
}

ThreadMonitor::ThreadMonitor(Tick period) : period_(period) {
  if (period <= 0) Fail(ErrorCode::kInvalidArgument, "monitor period must be positive");
}

std::size_t ThreadMonitor::Sample(ThreadInformationTable& table,
                                  const MonitorSource& source) {
  const std::vector<ThreadStats> stats = source.CollectLive();
  const std::size_t touched = table.ApplyStats(stats);
  ++samples_taken_;
  records_touched_ += touched;
  return touched;
}

}  // namespace tek
