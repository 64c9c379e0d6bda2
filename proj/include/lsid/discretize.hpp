#pragma once

// Exact zero-order-hold discretization and the algebraic maps between shift and
// incremental forms. Qd and Bd both come from augmented matrix exponentials, so
// no quadrature tuning and no inverse of A is involved.

#include "lsid/model.hpp"

namespace lsid {

// exp(M) by scaling-and-squaring with a diagonal rational approximant.
Matrix matrix_exponential(const Matrix& M);

// Ad = e^{A delta}; Bd = (int_0^delta e^{As} ds) B;
// Qd = int_0^delta e^{As} Q e^{A's} ds, symmetrized.
ShiftModel c2d_shift(const ContinuousModel& m, double delta);

// Ain = (Ad - I)/delta, Bin = Bd/delta, Qin = Qd/delta; exact inverse pair.
IncrementalModel shift_to_incremental(const ShiftModel& m);
ShiftModel incremental_to_shift(const IncrementalModel& m);

}  // namespace lsid
