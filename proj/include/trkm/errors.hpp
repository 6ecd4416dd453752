#pragma once

#include <stdexcept>
#include <string>

namespace trkm {

// Every library failure derives from Error; the category decides the CLI exit code.
class Error : public std::runtime_error {
 public:
  enum class Category { Usage, Data, Numeric };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

#define TRKM_DEFINE_ERROR(Name, Cat)                                      \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(Category::Cat, what) {} \
  };

TRKM_DEFINE_ERROR(InvalidArgument, Usage)
TRKM_DEFINE_ERROR(DimensionMismatch, Data)
TRKM_DEFINE_ERROR(EmptyClass, Data)
TRKM_DEFINE_ERROR(EmptyInput, Data)
TRKM_DEFINE_ERROR(DegenerateSplit, Data)
TRKM_DEFINE_ERROR(TooFewSamples, Data)
TRKM_DEFINE_ERROR(ParseError, Data)
TRKM_DEFINE_ERROR(MoreThanTwoClasses, Data)
TRKM_DEFINE_ERROR(MissingColumn, Data)
TRKM_DEFINE_ERROR(IoError, Data)
TRKM_DEFINE_ERROR(VersionMismatch, Data)
TRKM_DEFINE_ERROR(CorruptModel, Data)
TRKM_DEFINE_ERROR(FeatureCountMismatch, Data)
TRKM_DEFINE_ERROR(TaskMismatch, Data)
TRKM_DEFINE_ERROR(SingularSystem, Numeric)
TRKM_DEFINE_ERROR(DegenerateStatistic, Numeric)

#undef TRKM_DEFINE_ERROR

// A feature cell that does not parse as a number.
class NonNumericFeature : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace trkm
