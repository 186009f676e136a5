#include "ehr/event_model.hpp"

#include <algorithm>

#include "ehr/errors.hpp"

namespace ehr {

Attributes::Attributes(std::vector<Entry> entries) : entries_(std::move(entries)) {
    std::stable_sort(entries_.begin(), entries_.end(),
                     [](const Entry& a, const Entry& b) { return a.first < b.first; });
    // last write wins on duplicate keys
    std::vector<Entry> dedup;
    dedup.reserve(entries_.size());
    for (auto& e : entries_) {
        if (!dedup.empty() && dedup.back().first == e.first) {
            dedup.back().second = std::move(e.second);
        } else {
            dedup.push_back(std::move(e));
        }
    }
    entries_ = std::move(dedup);
}

void Attributes::set(std::string key, std::string value) {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                               [](const Entry& e, const std::string& k) { return e.first < k; });
    if (it != entries_.end() && it->first == key) {
        it->second = std::move(value);
    } else {
        entries_.emplace(it, std::move(key), std::move(value));
    }
}

const std::string* Attributes::find(std::string_view key) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                               [](const Entry& e, std::string_view k) { return e.first < k; });
    if (it != entries_.end() && it->first == key) {
        return &it->second;
    }
    return nullptr;
}

std::string Attributes::get_or(std::string_view key, std::string_view fallback) const {
    const std::string* v = find(key);
    return v ? *v : std::string(fallback);
}

bool is_reserved_attribute(std::string_view name) {
    return std::find(std::begin(kReservedAttributeNames), std::end(kReservedAttributeNames),
                     name) != std::end(kReservedAttributeNames);
}

void validate_event(const Event& e) {
    if (e.patient_id.empty()) {
        throw ValidationError("event has empty patient_id");
    }
    for (const auto& [k, v] : e.attributes) {
        if (is_reserved_attribute(k)) {
            throw ValidationError("event attribute uses reserved name '" + k + "'");
        }
    }
}

void validate_patient_record(const PatientRecord& p) {
    for (size_t i = 0; i < p.events.size(); ++i) {
        if (p.events[i].patient_id != p.patient_id) {
            throw ValidationError("patient record " + p.patient_id + " holds event of " +
                                  p.events[i].patient_id);
        }
        if (i > 0 && !(event_sort_key(p.events[i - 1]) < event_sort_key(p.events[i]))) {
            throw ValidationError("patient record " + p.patient_id + " is not sorted");
        }
    }
}

bool EventFilter::matches(const Event& e) const {
    if (event_types && !event_types->contains(e.event_type)) {
        return false;
    }
    if (time_range) {
        if (!e.timestamp || *e.timestamp < time_range->start || *e.timestamp >= time_range->end) {
            return false;
        }
    }
    if (attribute_equals) {
        for (const auto& [k, v] : *attribute_equals) {
            const std::string* got = e.attributes.find(k);
            if (!got || *got != v) {
                return false;
            }
        }
    }
    return true;
}

void validate_filter(const EventFilter& f) {
    if (f.time_range && !(f.time_range->start < f.time_range->end)) {
        throw ValidationError("event filter time_range requires start < end");
    }
}

size_t approx_event_bytes(const Event& e) {
    size_t n = sizeof(Event) + e.patient_id.capacity() + e.event_type.capacity();
    for (const auto& [k, v] : e.attributes) {
        n += sizeof(Attributes::Entry) + k.capacity() + v.capacity();
    }
    return n;
}

}  // namespace ehr
