#pragma once

#include <cstdint>

namespace pooltest {

// xoshiro256** seeded through splitmix64. Streams are split by key from the
// seed identity, so a child stream does not depend on how much of the parent
// has been consumed.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x5eed);

    std::uint64_t next();
    double uniform();       // [0, 1)
    double uniform_open();  // (0, 1)
    double normal();

    Rng split(std::uint64_t key) const;
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace pooltest
