#include <gtest/gtest.h>

#include <algorithm>
#include <tuple>

#include "ehr/errors.hpp"
#include "ehr/event_model.hpp"
#include "ehr/synth_bench.hpp"

using namespace ehr;

namespace {

Event ev(std::string pid, std::optional<Micros> ts, std::string type, std::uint64_t seq) {
    Event e;
    e.patient_id = std::move(pid);
    e.timestamp = ts;
    e.event_type = std::move(type);
    e.seq = seq;
    return e;
}

// Full-tuple comparison used as the sorting oracle.
bool oracle_less(const Event& a, const Event& b) {
    auto t = [](const Event& e) {
        return std::make_tuple(e.patient_id, e.timestamp ? 1 : 0, e.timestamp.value_or(0),
                               e.event_type, e.seq);
    };
    return t(a) < t(b);
}

Event random_event(synth::Pcg32& rng) {
    static const char* pids[] = {"P1", "P10", "P2", "p1", "\xff", ""};
    static const char* types[] = {"a", "b", "ab"};
    std::optional<Micros> ts;
    if (rng.uniform() < 0.7) {
        ts = rng.uniform_int(-3, 3);
    }
    return ev(pids[rng.uniform_int(0, 4)], ts, types[rng.uniform_int(0, 2)],
              static_cast<std::uint64_t>(rng.uniform_int(0, 3)));
}

}  // namespace

TEST(EventSortKey, UntimestampedFirst) {
    EXPECT_TRUE(EventLess{}(ev("P", std::nullopt, "z", 9), ev("P", -100, "a", 0)));
}

TEST(EventSortKey, PatientIdsCompareByBytes) {
    EXPECT_TRUE(EventLess{}(ev("P10", 5, "a", 0), ev("P2", 1, "a", 0)));
    EXPECT_TRUE(EventLess{}(ev("P2", 5, "a", 0), ev("\xc3\xa9", 1, "a", 0)));
}

TEST(EventSortKey, SixEventFixtureMatchesOracle) {
    std::vector<Event> v = {ev("P2", 10, "diagnoses", 1), ev("P1", std::nullopt, "patients", 0),
                            ev("P1", 10, "admissions", 0), ev("P10", 3, "admissions", 1),
                            ev("P1", 10, "admissions", 2), ev("P2", 10, "admissions", 0)};
    auto a = v;
    auto b = v;
    std::sort(a.begin(), a.end(), EventLess{});
    std::sort(b.begin(), b.end(), oracle_less);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.front().event_type, "patients");
    EXPECT_EQ(a[3].patient_id, "P10");
}

TEST(EventSortKeyProperty, TotalOrderOnRandomTriples) {
    synth::Pcg32 rng(11);
    for (int i = 0; i < 1000; ++i) {
        const Event a = random_event(rng), b = random_event(rng), c = random_event(rng);
        const auto ka = event_sort_key(a), kb = event_sort_key(b), kc = event_sort_key(c);
        // trichotomy / antisymmetry
        const int rel = (ka < kb) + (kb < ka) + (ka == kb);
        ASSERT_EQ(rel, 1);
        ASSERT_EQ(ka == kb, a.patient_id == b.patient_id && a.timestamp == b.timestamp &&
                                a.event_type == b.event_type && a.seq == b.seq);
        if (ka < kb && kb < kc) {
            ASSERT_TRUE(ka < kc);
        }
        if (ka <= kb && kb <= kc) {
            ASSERT_TRUE(ka <= kc);
        }
        ASSERT_EQ(ka < kb, oracle_less(a, b));
    }
}

TEST(EventSortKeyProperty, SortingIsDeterministic) {
    synth::Pcg32 rng(12);
    for (int i = 0; i < 1000; ++i) {
        std::vector<Event> v(static_cast<size_t>(rng.uniform_int(0, 12)));
        for (auto& e : v) e = random_event(rng);
        auto a = v;
        auto b = v;
        std::reverse(b.begin(), b.end());
        std::sort(a.begin(), a.end(), EventLess{});
        std::sort(b.begin(), b.end(), EventLess{});
        // equal keys are equal events, so any two sorts agree element-wise
        ASSERT_EQ(a, b);
    }
}

TEST(Event, Validation) {
    Event e = ev("P1", 1, "t", 0);
    EXPECT_NO_THROW(validate_event(e));
    e.attributes.set("timestamp", "x");
    EXPECT_THROW(validate_event(e), ValidationError);
    EXPECT_THROW(validate_event(ev("", 1, "t", 0)), ValidationError);
}

TEST(Attributes, SortedSetAndFind) {
    Attributes a;
    a.set("b", "2");
    a.set("a", "1");
    a.set("b", "3");
    ASSERT_EQ(a.size(), 2u);
    EXPECT_EQ(a.entries()[0].first, "a");
    EXPECT_EQ(*a.find("b"), "3");
    EXPECT_EQ(a.find("c"), nullptr);
    EXPECT_EQ(a.get_or("c", "z"), "z");
}

TEST(PatientRecord, Validation) {
    PatientRecord p{"P1", {ev("P1", 1, "a", 0), ev("P1", 2, "a", 1)}};
    EXPECT_NO_THROW(validate_patient_record(p));
    std::swap(p.events[0], p.events[1]);
    EXPECT_THROW(validate_patient_record(p), ValidationError);
    p.events = {ev("P2", 1, "a", 0)};
    EXPECT_THROW(validate_patient_record(p), ValidationError);
}

TEST(EventFilter, Matching) {
    Event e = ev("P1", 100, "diagnoses", 0);
    e.attributes.set("icd_code", "I10");
    EventFilter f;
    EXPECT_TRUE(f.matches(e));
    f.event_types = std::set<std::string>{"admissions"};
    EXPECT_FALSE(f.matches(e));
    f.event_types = std::set<std::string>{"diagnoses"};
    f.time_range = TimeRange{100, 101};
    EXPECT_TRUE(f.matches(e));
    f.time_range = TimeRange{0, 100};
    EXPECT_FALSE(f.matches(e));
    f.time_range.reset();
    f.attribute_equals = std::map<std::string, std::string>{{"icd_code", "I10"}};
    EXPECT_TRUE(f.matches(e));
    f.attribute_equals = std::map<std::string, std::string>{{"icd_code", "E11"}};
    EXPECT_FALSE(f.matches(e));

    EventFilter g;
    g.time_range = TimeRange{-1000, 1000};
    EXPECT_FALSE(g.matches(ev("P1", std::nullopt, "patients", 0)));
    g.time_range = TimeRange{5, 5};
    EXPECT_THROW(validate_filter(g), ValidationError);
}
