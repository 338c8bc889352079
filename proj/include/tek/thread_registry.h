#ifndef TEK_THREAD_REGISTRY_H_
#define TEK_THREAD_REGISTRY_H_

// Thread Information Table: one fixed 40-byte record per thread, keyed by tid,
// with a role index and a periodic monitor that refreshes usage fields.
//
// Record layout, little-endian, no padding:
//
//   offset size field
//        0    4 tid                 u32
//        4    1 policy              u8   (0 normal, 1 tek)
//        5    1 priority            i8   (nice)
//        6    1 criticality         u8   (0 unset, 1 non-time-critical, 2 time-critical)
//        7    1 zone                u8   (0 unknown, 1 low, 2 normal, 3 high)
//        8    8 creation_time_ns    u64
//       16    4 stack_reserved_kib  u32
//       20    4 vm_kib              u32
//       24    4 peak_stack_kib      u32
//       28   12 role                UTF-8, zero padded

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tek/cpu_mediator.h"
#include "tek/stack_tuner.h"
#include "tek/types.h"

namespace tek {

inline constexpr std::size_t kRecordBytes = 40;
inline constexpr std::size_t kRoleBytes = 12;

struct ThreadInfoRecord {
  std::uint32_t tid = 0;
  std::uint8_t policy = 0;
  std::int8_t priority = 0;
  std::uint8_t criticality = 0;
  std::uint8_t zone = 0;
  std::uint64_t creation_time_ns = 0;
  std::uint32_t stack_reserved_kib = 0;
  std::uint32_t vm_kib = 0;
  std::uint32_t peak_stack_kib = 0;
  std::array<char, kRoleBytes> role{};

  std::string RoleString() const;
  friend bool operator==(const ThreadInfoRecord&, const ThreadInfoRecord&) = default;
};

using RecordBytes = std::array<std::byte, kRecordBytes>;

RecordBytes Serialize(const ThreadInfoRecord& record);
ThreadInfoRecord Deserialize(std::span<const std::byte, kRecordBytes> bytes);

// At most 12 bytes, cut at a UTF-8 character boundary.
std::string TruncateRole(std::string_view role);

struct ThreadAttributes {
  std::string role;
  Criticality criticality = Criticality::kUnset;
  Policy policy = Policy::kSchedNormal;
  Nice priority;
  std::uint32_t stack_reserved_kib = 0;
  std::uint32_t vm_kib = 0;
};

struct AttributeUpdate {
  std::optional<std::string> role;
  std::optional<Criticality> criticality;
  std::optional<Policy> policy;
  std::optional<Nice> priority;
};

// What the monitor reads for one live thread.
struct ThreadStats {
  Tid tid = 0;
  Policy policy = Policy::kSchedNormal;
  Nice priority;
  std::uint32_t stack_reserved_kib = 0;
  std::uint32_t vm_kib = 0;
  std::uint32_t peak_stack_kib = 0;
  Zone zone = Zone::kUnknown;
};

class MonitorSource {
 public:
  virtual ~MonitorSource() = default;
  virtual std::vector<ThreadStats> CollectLive() const = 0;
};

// Many concurrent readers or one writer.
class ThreadInformationTable {
 public:
  // Invoked under the writer lock once an update has been validated and before
  // it is committed; a throw aborts the update. Must not call back into the
  // table.
  using UpdateSink = std::function<void(Tid, const AttributeUpdate&)>;

  ThreadInformationTable();

  void set_update_sink(UpdateSink sink) { sink_ = std::move(sink); }

  // Throws kThreadExists.
  ThreadInfoRecord Register(Tid tid, const ThreadAttributes& attrs,
                            std::uint64_t now_ns);
  // Throws kNoSuchThread, kCriticalityImmutable, or whatever the sink throws.
  void SetAttributes(Tid tid, const AttributeUpdate& update);
  // Throws kNoSuchThread.
  ThreadInfoRecord GetAttributes(Tid tid) const;
  std::vector<Tid> LookupByRole(std::string_view role) const;

  // Terminated threads keep their final record; the monitor skips them.
  void Freeze(Tid tid);
  bool IsFrozen(Tid tid) const;

  // Refreshes every non-frozen record present in `stats`. Returns the number of
  // records touched.
  std::size_t ApplyStats(std::span<const ThreadStats> stats);

  std::size_t size() const;
  std::size_t FootprintBytes() const { return size() * kRecordBytes; }

  // 8-byte little-endian count followed by the records in tid order.
  std::vector<std::byte> DumpBinary() const;
  static ThreadInformationTable LoadBinary(std::span<const std::byte> data);
  std::string DumpCsv() const;

  std::vector<ThreadInfoRecord> Snapshot() const;
  std::map<std::string, std::set<Tid>> role_index() const;
  // Index recomputed from the records alone.
  std::map<std::string, std::set<Tid>> RebuildRoleIndex() const;

 private:
  void IndexRole(Tid tid, const std::string& role);
  void UnindexRole(Tid tid, const std::string& role);
  // Caller holds the lock.
  std::vector<const ThreadInfoRecord*> SortedRecords() const;

  std::unique_ptr<std::shared_mutex> mu_;
  // Hashed so get/set stay O(1) in the record count; dumps sort by tid.
  std::unordered_map<Tid, ThreadInfoRecord> records_;
  std::map<std::string, std::set<Tid>> role_index_;
  std::unordered_set<Tid> frozen_;
  UpdateSink sink_;
};

inline constexpr std::string_view kTableCsvHeader =
    "tid,policy,priority,criticality,zone,creation_ns,stack_kib,vm_kib,peak_kib,role";

// Samples every `period` ticks.
class ThreadMonitor {
 public:
  explicit ThreadMonitor(Tick period);

  Tick period() const { return period_; }
  bool Due(Tick tick) const { return tick % period_ == 0; }

  // Pulls stats for live threads from `source` into `table`.
  std::size_t Sample(ThreadInformationTable& table, const MonitorSource& source);

  std::uint64_t samples_taken() const { return samples_taken_; }
  std::uint64_t records_touched() const { return records_touched_; }

 private:
  Tick period_;
  std::uint64_t samples_taken_ = 0;
  std::uint64_t records_touched_ = 0;
};

}  // namespace tek

#endif  // TEK_THREAD_REGISTRY_H_
