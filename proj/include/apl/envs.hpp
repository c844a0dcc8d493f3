#pragma once

#include <memory>
#include <string>

#include "apl/envs/blocks.hpp"
#include "apl/envs/pickplace1d.hpp"
#include "apl/envs/two_rooms.hpp"

namespace apl {

inline std::unique_ptr<Environment> make_environment(const std::string& name) {
    if (name == "pickplace1d") return std::make_unique<PickPlace1D>();
    if (name == "blocks") return std::make_unique<BlocksEnv>();
    if (name == "two_rooms") return std::make_unique<TwoRoomsEnv>();
    throw std::invalid_argument("unknown environment " + name +
                                " (expected pickplace1d | two_rooms | blocks)");
}

}  // namespace apl
