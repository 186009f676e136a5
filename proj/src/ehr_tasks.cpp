#include "ehr/ehr_tasks.hpp"

#include <cmath>
#include <unordered_map>

#include "ehr/errors.hpp"

namespace ehr {

std::vector<Admission> collect_admissions(const PatientRecord& p, const EhrTableNames& names) {
    std::vector<Admission> adms;
    std::unordered_map<std::string, size_t> by_visit;
    for (const auto& e : p.events) {
        if (e.event_type != names.admissions) {
            continue;
        }
        Admission a;
        a.visit_id = e.attributes.get_or(names.visit_key);
        a.admit = e.timestamp;
        if (const std::string* d = e.attributes.find(names.discharge_time)) {
            a.discharge = parse_timestamp(*d, names.time_format);
        }
        a.died = e.attributes.get_or(names.death_flag) == "1";
        if (!a.visit_id.empty()) {
            by_visit.emplace(a.visit_id, adms.size());
        }
        adms.push_back(std::move(a));
    }
    for (const auto& e : p.events) {
        TokenList Admission::*list = nullptr;
        const std::string* code_attr = nullptr;
        if (e.event_type == names.diagnoses) {
            list = &Admission::conditions;
            code_attr = &names.diagnosis_code;
        } else if (e.event_type == names.procedures) {
            list = &Admission::procedures;
            code_attr = &names.procedure_code;
        } else if (e.event_type == names.prescriptions) {
            list = &Admission::drugs;
            code_attr = &names.drug_code;
        } else {
            continue;
        }
        const std::string* visit = e.attributes.find(names.visit_key);
        const std::string* code = e.attributes.find(*code_attr);
        if (!visit || !code) {
            continue;
        }
        auto it = by_visit.find(*visit);
        if (it != by_visit.end()) {
            (adms[it->second].*list).push_back(*code);
        }
    }
    return adms;
}

namespace {

bool has_codes(const Admission& a) {
    return !a.conditions.empty() && !a.procedures.empty() && !a.drugs.empty();
}

}  // namespace

std::vector<RawSample> mortality_apply(const PatientRecord& p, TaskContext& ctx,
                                       const EhrTableNames& names) {
    const auto adms = collect_admissions(p, names);
    std::vector<RawSample> out;
    for (size_t i = 0; i + 1 < adms.size(); ++i) {
        if (!has_codes(adms[i])) {
            ++ctx.skipped;
            continue;
        }
        RawSample s;
        s.patient_id = p.patient_id;
        s.values["conditions"] = adms[i].conditions;
        s.values["procedures"] = adms[i].procedures;
        s.values["drugs"] = adms[i].drugs;
        s.values["mortality"] = std::int64_t{adms[i + 1].died ? 1 : 0};
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<RawSample> drugrec_apply(const PatientRecord& p, TaskContext& ctx,
                                     const EhrTableNames& names) {
    const auto adms = collect_admissions(p, names);
    std::vector<RawSample> out;
    for (size_t i = 1; i < adms.size(); ++i) {
        if (!has_codes(adms[i])) {
            ++ctx.skipped;
            continue;
        }
        NestedTokens hist;
        for (size_t k = 0; k < i; ++k) {
            hist.push_back(adms[k].drugs);
        }
        RawSample s;
        s.patient_id = p.patient_id;
        s.values["conditions"] = adms[i].conditions;
        s.values["procedures"] = adms[i].procedures;
        s.values["drugs_hist"] = std::move(hist);
        s.values["drugs"] = adms[i].drugs;
        out.push_back(std::move(s));
    }
    return out;
}

int los_bin(double d) {
    if (std::isnan(d) || d < 0) {
        throw ValidationError("length of stay must be a non-negative number of days");
    }
    int cls = 0;
    for (double edge : kLosEdges) {
        if (d >= edge) {
            ++cls;
        }
    }
    return cls;
}

std::vector<RawSample> los_apply(const PatientRecord& p, TaskContext& ctx,
                                 const EhrTableNames& names) {
    const auto adms = collect_admissions(p, names);
    std::vector<RawSample> out;
    for (const auto& a : adms) {
        if (!has_codes(a) || !a.admit || !a.discharge || *a.discharge < *a.admit) {
            ++ctx.skipped;
            continue;
        }
        const double days =
            static_cast<double>(*a.discharge - *a.admit) / static_cast<double>(kMicrosPerDay);
        RawSample s;
        s.patient_id = p.patient_id;
        s.values["conditions"] = a.conditions;
        s.values["procedures"] = a.procedures;
        s.values["drugs"] = a.drugs;
        s.values["los"] = std::to_string(los_bin(days));
        out.push_back(std::move(s));
    }
    return out;
}

TaskDefinition mortality_task(const EhrTableNames& names) {
    TaskDefinition t;
    t.task_name = "mortality";
    t.input_schema = {{"conditions", ProcessorKind::sequence},
                      {"procedures", ProcessorKind::sequence},
                      {"drugs", ProcessorKind::sequence}};
    t.output_schema = {{"mortality", LabelKind::binary}};
    t.apply = [names](const PatientRecord& p, TaskContext& ctx) {
        return mortality_apply(p, ctx, names);
    };
    return t;
}

TaskDefinition drugrec_task(const EhrTableNames& names) {
    TaskDefinition t;
    t.task_name = "drugrec";
    t.input_schema = {{"conditions", ProcessorKind::sequence},
                      {"procedures", ProcessorKind::sequence},
                      {"drugs_hist", ProcessorKind::nested_sequence}};
    t.output_schema = {{"drugs", LabelKind::multilabel}};
    t.apply = [names](const PatientRecord& p, TaskContext& ctx) {
        return drugrec_apply(p, ctx, names);
    };
    return t;
}

TaskDefinition los_task(const EhrTableNames& names) {
    TaskDefinition t;
    t.task_name = "los";
    t.input_schema = {{"conditions", ProcessorKind::sequence},
                      {"procedures", ProcessorKind::sequence},
                      {"drugs", ProcessorKind::sequence}};
    t.output_schema = {{"los", LabelKind::multiclass}};
    std::vector<std::string> classes;
    for (int c = 0; c < kLosClasses; ++c) {
        classes.push_back(std::to_string(c));
    }
    t.fixed_label_spaces["los"] = classes;
    t.apply = [names](const PatientRecord& p, TaskContext& ctx) {
        return los_apply(p, ctx, names);
    };
    return t;
}

std::optional<TaskDefinition> builtin_task(const std::string& name, const EhrTableNames& names) {
    if (name == "mortality") {
        return mortality_task(names);
    }
    if (name == "drugrec") {
        return drugrec_task(names);
    }
    if (name == "los") {
        return los_task(names);
    }
    return std::nullopt;
}

std::vector<std::string> builtin_task_names() { return {"mortality", "drugrec", "los"}; }

}  // namespace ehr
