#pragma once

#include <stdexcept>
#include <string>

namespace multicause {

// Base of every error the library raises. Callers that only need to know
// "an estimator failed" catch this; the subclasses carry the reason.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SpecificationError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class DataError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };

// Cross-product matrix with condition number above kRankConditionLimit.
class RankDeficiencyError : public Error { using Error::Error; };

class DegenerateFactorError : public Error { using Error::Error; };
class CollinearityRiskError : public Error { using Error::Error; };
class ConvergenceError : public Error { using Error::Error; };
class SeparationError : public Error { using Error::Error; };
class InstabilityError : public Error { using Error::Error; };
class UnsupportedComparisonError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };

// Raised by the harness when an estimator fails on too many replications.
class AggregateInstabilityError : public Error {
public:
    AggregateInstabilityError(std::string estimator, const std::string &what)
        : Error(what), estimator_(std::move(estimator)) {}
    const std::string &estimator() const noexcept { return estimator_; }

private:
    std::string estimator_;
};

inline constexpr double kRankConditionLimit = 1e12;

}  // namespace multicause
