#pragma once

#include <cstdint>
#include <vector>

namespace allee {

// Patch occupation densities, one value in [0,1] per vertex.
using Configuration = std::vector<double>;

// Position of a configuration relative to the threshold theta.
enum class ConfigClass : std::uint8_t {
    upper,    // every patch strictly above theta (absorbing)
    lower,    // every patch strictly below theta (absorbing)
    neither,
};

// Fate of a trajectory.
enum class Outcome : std::uint8_t {
    expansion,   // hit the upper absorbing set
    extinction,  // hit the lower absorbing set
    undecided,   // stopped by event/time cap before absorption
};

const char* to_string(ConfigClass c) noexcept;
const char* to_string(Outcome o) noexcept;

}  // namespace allee
