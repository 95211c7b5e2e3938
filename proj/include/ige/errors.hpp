#ifndef IGE_ERRORS_HPP
#define IGE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ige {

struct PlacementInfeasible : std::runtime_error {
    explicit PlacementInfeasible(const std::string& m) : std::runtime_error(m) {}
};

struct MissingBeam : std::runtime_error {
    explicit MissingBeam(const std::string& m) : std::runtime_error(m) {}
};

struct BadSymbolCount : std::runtime_error {
    explicit BadSymbolCount(const std::string& m) : std::runtime_error(m) {}
};

struct StreamTooShort : std::runtime_error {
    explicit StreamTooShort(const std::string& m) : std::runtime_error(m) {}
};

struct EmptyBlock : std::runtime_error {
    explicit EmptyBlock(const std::string& m) : std::runtime_error(m) {}
};

struct DimensionMismatch : std::runtime_error {
    explicit DimensionMismatch(const std::string& m) : std::runtime_error(m) {}
};

struct RankDeficient : std::runtime_error {
    explicit RankDeficient(const std::string& m) : std::runtime_error(m) {}
};

struct BadTolerance : std::runtime_error {
    explicit BadTolerance(const std::string& m) : std::runtime_error(m) {}
};

struct Infeasible : std::runtime_error {
    explicit Infeasible(const std::string& m) : std::runtime_error(m) {}
};

struct SolverFailure : std::runtime_error {
    explicit SolverFailure(const std::string& m) : std::runtime_error(m) {}
};

struct RoundingInfeasible : std::runtime_error {
    explicit RoundingInfeasible(const std::string& m) : std::runtime_error(m) {}
};

struct StalledRank : std::runtime_error {
    explicit StalledRank(const std::string& m) : std::runtime_error(m) {}
};

struct TooLarge : std::runtime_error {
    explicit TooLarge(const std::string& m) : std::runtime_error(m) {}
};

struct ConfigInvalid : std::runtime_error {
    explicit ConfigInvalid(const std::string& m) : std::runtime_error(m) {}
};

struct MissingData : std::runtime_error {
    explicit MissingData(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace ige

#endif
