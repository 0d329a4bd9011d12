#pragma once

#include "overdet/system.hpp"

#include <string>

namespace fixtures {

inline const char* linear_model = R"(
name linear_model
coords t, x
time t
normal x
field G(t, x)
field H(t, x)
eq dt(H) - dx(G) = H
eq dt(G) + dx(H) = G
over dt(H) - x*dx(G) = 0
)";

// Same determined pair with an extra x*G in the over-determining equation;
// its only joint solution is zero.
inline const char* trivial_only = R"(
name trivial_only
coords t, x
time t
normal x
field G(t, x)
field H(t, x)
eq dt(H) - dx(G) = H
eq dt(G) + dx(H) = G
over dt(H) - x*dx(G) + x*G = 0
)";

inline const char* counterexample = R"(
name counterexample
coords t, x
time t
normal x
field alpha(t, x)
eq dt(alpha) + dx(alpha)
over dt(alpha) + alpha
)";

inline overdet::PdeSystem parse(const char* src) { return overdet::parse_system(src); }

}  // namespace fixtures
