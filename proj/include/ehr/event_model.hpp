#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ehr/timestamp.hpp"

namespace ehr {

// Raw cell values keyed by column name, kept sorted by key. Missing cells
// are simply absent.
class Attributes {
   public:
    using Entry = std::pair<std::string, std::string>;

    Attributes() = default;
    explicit Attributes(std::vector<Entry> entries);

    // Inserts or overwrites.
    void set(std::string key, std::string value);
    const std::string* find(std::string_view key) const;
    std::string get_or(std::string_view key, std::string_view fallback = {}) const;

    const std::vector<Entry>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    friend bool operator==(const Attributes&, const Attributes&) = default;

   private:
    std::vector<Entry> entries_;
};

inline constexpr std::string_view kReservedAttributeNames[] = {"patient_id", "timestamp",
                                                               "event_type"};

bool is_reserved_attribute(std::string_view name);

struct Event {
    std::string patient_id;
    std::string event_type;
    std::optional<Micros> timestamp;
    std::uint64_t seq = 0;
    Attributes attributes;

    friend bool operator==(const Event&, const Event&) = default;
};

// Throws ValidationError when an Event breaks its invariants.
void validate_event(const Event& e);

// (patient_id, ts_class, timestamp, event_type, seq). Views borrow from the
// event, so the key must not outlive it.
struct EventSortKey {
    std::string_view patient_id;
    int ts_class = 0;
    Micros timestamp = 0;
    std::string_view event_type;
    std::uint64_t seq = 0;

    friend std::strong_ordering operator<=>(const EventSortKey& a, const EventSortKey& b) {
        if (auto c = a.patient_id.compare(b.patient_id); c != 0) {
            return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
        }
        if (auto c = a.ts_class <=> b.ts_class; c != 0) {
            return c;
        }
        if (auto c = a.timestamp <=> b.timestamp; c != 0) {
            return c;
        }
        if (auto c = a.event_type.compare(b.event_type); c != 0) {
            return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
        }
        return a.seq <=> b.seq;
    }
    friend bool operator==(const EventSortKey&, const EventSortKey&) = default;
};

// string_view::compare is byte-wise (char_traits<char> compares as unsigned
// char), which gives the raw byte order required for patient ids.
inline EventSortKey event_sort_key(const Event& e) {
    return EventSortKey{e.patient_id, e.timestamp ? 1 : 0, e.timestamp.value_or(0), e.event_type,
                        e.seq};
}

struct EventLess {
    bool operator()(const Event& a, const Event& b) const {
        return event_sort_key(a) < event_sort_key(b);
    }
};

struct PatientRecord {
    std::string patient_id;
    std::vector<Event> events;
};

// Throws ValidationError if events are not all of patient_id or not sorted.
void validate_patient_record(const PatientRecord& p);

struct TimeRange {
    Micros start;
    Micros end;  // exclusive
};

struct EventFilter {
    std::optional<std::set<std::string>> event_types;
    std::optional<TimeRange> time_range;
    std::optional<std::map<std::string, std::string>> attribute_equals;

    // Untimestamped events never match a time_range.
    bool matches(const Event& e) const;
};

void validate_filter(const EventFilter& f);

// Rough in-memory footprint of an event, used for budget accounting.
size_t approx_event_bytes(const Event& e);

}  // namespace ehr
