#pragma once

#include <Eigen/Core>

#include "afmap/basis.hpp"
#include "afmap/descriptors.hpp"
#include "afmap/pointwise.hpp"

namespace afmap {

enum class MapDirection : unsigned char { XtoY = 0, YtoX = 1 };

/// k′ x k′ map transporting X-side basis coefficients to the Y side.
struct FunctionalMap {
  Eigen::MatrixXd C;
  MapDirection direction = MapDirection::XtoY;

  int k() const { return static_cast<int>(C.rows()); }
};

/// argmin_C ‖C Ψ_X†F_X − Ψ_Y†F_Y‖²_F + λ‖CΛ_X − Λ_Y C‖²_F, solved row by row.
/// Throws SingularSystemError when a row system's condition number exceeds 1e12.
FunctionalMap fmap_solve(const FeatureSet& fx, const FeatureSet& fy, const LearnableBasis& bx,
                         const LearnableBasis& by, int k, double lambda_reg);

/// C = Ψ_Y,k† Π Ψ_X,k.
FunctionalMap fmap_project(const PointwiseMap& pi, const LearnableBasis& bx, const LearnableBasis& by,
                           int k);

/// ‖C_XY C_YX − I‖²_F
double energy_bijectivity(const FunctionalMap& c_xy, const FunctionalMap& c_yx);
/// ‖C Cᵀ − I‖²_F
double energy_orthogonality(const FunctionalMap& c);
/// ‖C − Ψ_Y†ΠΨ_X‖²_F
double energy_coupling(const FunctionalMap& c, const PointwiseMap& pi, const LearnableBasis& bx,
                       const LearnableBasis& by);

}  // namespace afmap
