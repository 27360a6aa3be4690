#pragma once

#include <stdexcept>
#include <string>

namespace mvinfo {

// Tolerances used across the library. Probability tensors must normalize to
// within kNormTol; derived float identities (chain rule, symmetry) are held
// to kIdentityTol; optimal-set membership ties are resolved at kTieTol.
inline constexpr double kNormTol = 1e-12;
inline constexpr double kIdentityTol = 1e-10;
inline constexpr double kTieTol = 1e-9;

// Enumeration over representation maps refuses to start above this count.
inline constexpr unsigned long long kMapCapacity = 10'000'000ULL;

class capacity_error : public std::runtime_error {
public:
    explicit capacity_error(const std::string& what) : std::runtime_error(what) {}
};

class training_error : public std::runtime_error {
public:
    training_error(const std::string& what, long step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mvinfo
