#pragma once

#include <stdexcept>
#include <string>

namespace ehr {

// Base of every error the engine raises. name() is the stable error kind
// string surfaced by the CLI and the binding layer.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
    virtual const char* name() const noexcept { return "Error"; }
};

#define EHR_DEFINE_ERROR(Type)                                           \
    class Type : public Error {                                          \
       public:                                                           \
        using Error::Error;                                              \
        const char* name() const noexcept override { return #Type; }     \
    };

// descriptor
EHR_DEFINE_ERROR(SyntaxError)
EHR_DEFINE_ERROR(ValidationError)
// ingest / store
EHR_DEFINE_ERROR(IoError)
EHR_DEFINE_ERROR(JoinKeyError)
EHR_DEFINE_ERROR(TimestampParseError)
EHR_DEFINE_ERROR(BudgetError)
EHR_DEFINE_ERROR(ManifestError)
// tasks / processors
EHR_DEFINE_ERROR(TaskError)
EHR_DEFINE_ERROR(SchemaError)
EHR_DEFINE_ERROR(LabelError)
// medcode
EHR_DEFINE_ERROR(CycleError)
EHR_DEFINE_ERROR(DanglingParentError)
EHR_DEFINE_ERROR(DuplicateCodeError)
EHR_DEFINE_ERROR(UnknownCodeError)
// uncertainty
EHR_DEFINE_ERROR(ShapeError)
EHR_DEFINE_ERROR(DegenerateError)
EHR_DEFINE_ERROR(AlphaError)

#undef EHR_DEFINE_ERROR

}  // namespace ehr
