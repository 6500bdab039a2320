#pragma once
#include <stdexcept>
#include <string>

namespace fblab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define FBLAB_ERROR(Name)                         \
    struct Name : Error {                         \
        using Error::Error;                       \
    }

FBLAB_ERROR(NonConvergence);
FBLAB_ERROR(ResidualTooLarge);
FBLAB_ERROR(DomainError);
FBLAB_ERROR(BoundaryError);
FBLAB_ERROR(NewtonDiverged);
FBLAB_ERROR(SingularJacobian);
FBLAB_ERROR(OutsideBand);
FBLAB_ERROR(AmbiguousProjection);
FBLAB_ERROR(FocalPoint);
FBLAB_ERROR(SolverFailure);
FBLAB_ERROR(IndefiniteOperator);
FBLAB_ERROR(CertificateFailed);
FBLAB_ERROR(WindowViolation);
FBLAB_ERROR(OrderingFailure);
FBLAB_ERROR(PositivityViolation);
FBLAB_ERROR(NoRoot);
FBLAB_ERROR(NotMonotone);
FBLAB_ERROR(NumericalInconsistency);
FBLAB_ERROR(NoPassingAlpha);
FBLAB_ERROR(ConfigError);
FBLAB_ERROR(NotConverged);
FBLAB_ERROR(GraphViolation);
FBLAB_ERROR(TooLarge);
FBLAB_ERROR(BoundarySaturated);
FBLAB_ERROR(UpstreamMissing);

#undef FBLAB_ERROR

} // namespace fblab
