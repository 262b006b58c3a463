// Mode construction and bookkeeping: the standard smooth test mode, time
// reversal, overlaps, and the efficiency -> fidelity map.
#pragma once

#include "cavmem/types.hpp"

namespace cavmem {

// Smooth single-bump input mode of duration T, zero at both endpoints:
//
//   E(t) = A * (exp(-30 (t/T - 1/2)^2) - exp(-30/4)) / sqrt(T)
//
// with A chosen so the trapezoidal norm^2 on the given grid is exactly 1
// (A is about 2.09). The grid must span [0, T].
Envelope gaussian_like_mode(double T, const TimeGrid& grid);

// Antiunitary time reversal on [0, T]: value(t) -> conj(value(T - t)).
// An involution; preserves norms. The grid must span [0, T].
Envelope time_reverse(const Envelope& env, double T);

// Trapezoidal overlap integral(conj(a) * b) dt. Grids must match exactly.
Complex mode_overlap(const Envelope& a, const Envelope& b);

// Maps a storage/retrieval efficiency to the fidelity of the corresponding
// state map, F = (1 + eta) / 2. Domain error outside [0, 1].
double fidelity_from_efficiency(double eta);

}  // namespace cavmem
