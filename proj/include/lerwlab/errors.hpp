#pragma once

#include <stdexcept>
#include <string>

namespace lerwlab {

struct MaxStepsExceeded : std::runtime_error {
    explicit MaxStepsExceeded(const std::string& what) : std::runtime_error(what) {}
};

struct NoExit : std::runtime_error {
    explicit NoExit(const std::string& what) : std::runtime_error(what) {}
};

struct NonAdjacentStep : std::runtime_error {
    explicit NonAdjacentStep(const std::string& what) : std::runtime_error(what) {}
};

struct AttemptsExhausted : std::runtime_error {
    explicit AttemptsExhausted(const std::string& what) : std::runtime_error(what) {}
};

struct NoCrossing : std::runtime_error {
    explicit NoCrossing(const std::string& what) : std::runtime_error(what) {}
};

struct InsufficientGrid : std::runtime_error {
    explicit InsufficientGrid(const std::string& what) : std::runtime_error(what) {}
};

struct Disconnected : std::runtime_error {
    explicit Disconnected(const std::string& what) : std::runtime_error(what) {}
};

struct SolverDiverged : std::runtime_error {
    explicit SolverDiverged(const std::string& what) : std::runtime_error(what) {}
};

struct InsufficientSpan : std::runtime_error {
    explicit InsufficientSpan(const std::string& what) : std::runtime_error(what) {}
};

struct GridMismatch : std::runtime_error {
    explicit GridMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigInvalid : std::runtime_error {
    explicit ConfigInvalid(const std::string& what) : std::runtime_error(what) {}
};

struct ManifestCorrupt : std::runtime_error {
    explicit ManifestCorrupt(const std::string& what) : std::runtime_error(what) {}
};

struct ResultsMissing : std::runtime_error {
    explicit ResultsMissing(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lerwlab
