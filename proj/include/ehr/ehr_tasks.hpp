#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ehr/task_engine.hpp"

namespace ehr {

// Table and column names the built-in tasks read. Defaults match the
// synthetic generator's layout.
struct EhrTableNames {
    std::string admissions = "admissions";
    std::string diagnoses = "diagnoses";
    std::string procedures = "procedures";
    std::string prescriptions = "prescriptions";
    std::string visit_key = "hadm_id";
    std::string discharge_time = "dischtime";
    std::string death_flag = "hospital_expire_flag";
    std::string diagnosis_code = "icd_code";
    std::string procedure_code = "icd_code";
    std::string drug_code = "ndc";
    std::string time_format = "%Y-%m-%d %H:%M:%S";
};

struct Admission {
    std::string visit_id;
    std::optional<Micros> admit;
    std::optional<Micros> discharge;
    bool died = false;
    TokenList conditions;
    TokenList procedures;
    TokenList drugs;
};

// Admissions in event order with their code lists (codes keep event order).
std::vector<Admission> collect_admissions(const PatientRecord& p, const EhrTableNames& names = {});

// Mortality: admission i -> death flag of admission i+1.
std::vector<RawSample> mortality_apply(const PatientRecord& p, TaskContext& ctx,
                                       const EhrTableNames& names = {});
// Drug recommendation: admission i >= 1 -> drug set of admission i, with the
// drug lists of admissions 0..i-1 as history.
std::vector<RawSample> drugrec_apply(const PatientRecord& p, TaskContext& ctx,
                                     const EhrTableNames& names = {});
// Length of stay: one sample per admission, label = los_bin(days).
std::vector<RawSample> los_apply(const PatientRecord& p, TaskContext& ctx,
                                 const EhrTableNames& names = {});

inline constexpr int kLosClasses = 10;
// Lower edges (days) of classes 1..9: one-day bins through day 8, then
// [8, 14) and [14, inf).
inline constexpr std::array<double, 9> kLosEdges = {1, 2, 3, 4, 5, 6, 7, 8, 14};

// Throws ValidationError for negative or NaN durations.
int los_bin(double duration_days);

TaskDefinition mortality_task(const EhrTableNames& names = {});
TaskDefinition drugrec_task(const EhrTableNames& names = {});
TaskDefinition los_task(const EhrTableNames& names = {});

// "mortality", "drugrec" or "los".
std::optional<TaskDefinition> builtin_task(const std::string& name, const EhrTableNames& names = {});
std::vector<std::string> builtin_task_names();

}  // namespace ehr
