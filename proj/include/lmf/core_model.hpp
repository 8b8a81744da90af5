#pragma once

#include "lmf/types.hpp"

namespace lmf {

enum class Centering { Overall, Columns, None };

// Centers each matrix to mean zero over its observed entries and scales it to
// unit Frobenius norm (observed entries only). Missing cells are left as they
// are. A matrix that is all zeros after centering keeps scale 1.
LinkedDataset center_and_scale(const LinkedDataset& data,
                               Centering centering = Centering::Overall);

// Maps a matrix on the preprocessed scale back to the original scale.
Matrix restore_scale(const Matrix& m, const MatrixTransform& t);

// Undoes center_and_scale on all three matrices.
LinkedDataset restore_scale(const LinkedDataset& data);

// Relative reconstruction error: sum of squared differences over the six
// components divided by the squared norm of the truth.
double reconstruction_error(const Decomposition& truth,
                            const Decomposition& estimate);

// Relative residual error of the model totals against the data.
double residual_error(const LinkedDataset& data, const Decomposition& estimate);

// Sum of squared residuals of the model totals against the data.
double total_sse(const LinkedDataset& data, const Decomposition& estimate);

}  // namespace lmf
