#pragma once

#include <stdexcept>
#include <string>

namespace revassist {

// Base for every error raised by the library. Callers that only need to
// report a failure can catch this; the subclasses carry the kind.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define REVASSIST_ERROR(Name)                      \
    class Name : public Error {                    \
    public:                                        \
        using Error::Error;                        \
    }

// patch_model
REVASSIST_ERROR(MalformedDiff);
// context_retriever
REVASSIST_ERROR(RepoUnreadable);
REVASSIST_ERROR(FileMissing);
REVASSIST_ERROR(LineOutOfRange);
// example_store
REVASSIST_ERROR(EmbedderFailure);
REVASSIST_ERROR(StoreCorrupt);
// llm_pipeline
REVASSIST_ERROR(BackendError);
REVASSIST_ERROR(InvalidInput);
REVASSIST_ERROR(NotNeedsReview);
REVASSIST_ERROR(TemplateError);
// review_service
REVASSIST_ERROR(UnknownComment);
REVASSIST_ERROR(AlreadyEvaluated);
REVASSIST_ERROR(InvalidDecision);
REVASSIST_ERROR(PersistenceError);
// analytics
REVASSIST_ERROR(EmptyDenominator);
REVASSIST_ERROR(DegenerateTable);
REVASSIST_ERROR(ZeroVariance);
REVASSIST_ERROR(KTooLarge);
REVASSIST_ERROR(DegenerateAgreement);
// configuration / CLI
REVASSIST_ERROR(ConfigError);

#undef REVASSIST_ERROR

}  // namespace revassist
