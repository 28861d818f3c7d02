#ifndef CMV_ERROR_HPP
#define CMV_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace cmv {

enum class Errc {
  EmptyCorpus,
  FormatError,
  IoError,
  BadParameter,
  IndexError,
  BadInput,
  BadClustering,
  ZeroMassWord,
  DegenerateInput,
  OracleSizeLimit,
  NumericalOverflow,
  ShapeError,
  DegenerateCost,
  OovError,
  EmptySentence,
  DegenerateMetric,
};

constexpr std::string_view errc_name(Errc e) noexcept {
  switch (e) {
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::FormatError: return "FormatError";
    case Errc::IoError: return "IoError";
    case Errc::BadParameter: return "BadParameter";
    case Errc::IndexError: return "IndexError";
    case Errc::BadInput: return "BadInput";
    case Errc::BadClustering: return "BadClustering";
    case Errc::ZeroMassWord: return "ZeroMassWord";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::OracleSizeLimit: return "OracleSizeLimit";
    case Errc::NumericalOverflow: return "NumericalOverflow";
    case Errc::ShapeError: return "ShapeError";
    case Errc::DegenerateCost: return "DegenerateCost";
    case Errc::OovError: return "OovError";
    case Errc::EmptySentence: return "EmptySentence";
    case Errc::DegenerateMetric: return "DegenerateMetric";
  }
  return "Unknown";
}

/// Base of every error thrown by the library. `kind()` identifies the
/// failure class; the concrete subclasses below allow catching one kind.
class Error : public std::runtime_error {
 public:
  Error(Errc kind, const std::string& what)
      : std::runtime_error(std::string(errc_name(kind)) + ": " + what), kind_(kind) {}

  Errc kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return errc_name(kind_); }

 private:
  Errc kind_;
};

template <Errc K>
class ErrorOf : public Error {
 public:
  explicit ErrorOf(const std::string& what) : Error(K, what) {}
};

using EmptyCorpus = ErrorOf<Errc::EmptyCorpus>;
using FormatError = ErrorOf<Errc::FormatError>;
using IoError = ErrorOf<Errc::IoError>;
using BadParameter = ErrorOf<Errc::BadParameter>;
using IndexError = ErrorOf<Errc::IndexError>;
using BadInput = ErrorOf<Errc::BadInput>;
using BadClustering = ErrorOf<Errc::BadClustering>;
using ZeroMassWord = ErrorOf<Errc::ZeroMassWord>;
using DegenerateInput = ErrorOf<Errc::DegenerateInput>;
using OracleSizeLimit = ErrorOf<Errc::OracleSizeLimit>;
using NumericalOverflow = ErrorOf<Errc::NumericalOverflow>;
using ShapeError = ErrorOf<Errc::ShapeError>;
using DegenerateCost = ErrorOf<Errc::DegenerateCost>;
using OovError = ErrorOf<Errc::OovError>;
using EmptySentence = ErrorOf<Errc::EmptySentence>;
using DegenerateMetric = ErrorOf<Errc::DegenerateMetric>;

}  // namespace cmv

#endif  // CMV_ERROR_HPP
