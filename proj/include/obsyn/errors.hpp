#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace obsyn {

/// Base class for all numerical/domain failures raised by the library.
/// `name()` is the stable machine-readable identifier the CLI prints on
/// stderr before exiting with code 3.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(what), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

#define OBSYN_DEFINE_ERROR(TYPE)                        \
  struct TYPE : Error {                                 \
    explicit TYPE(const std::string& what = #TYPE)      \
        : Error(#TYPE, what) {}                         \
  }

OBSYN_DEFINE_ERROR(NotControllable);
OBSYN_DEFINE_ERROR(NotSPD);
OBSYN_DEFINE_ERROR(NoStabilizingSolution);
OBSYN_DEFINE_ERROR(NotHurwitz);
OBSYN_DEFINE_ERROR(NonFiniteState);
OBSYN_DEFINE_ERROR(InvalidEpsilon);
OBSYN_DEFINE_ERROR(DegenerateObservation);
OBSYN_DEFINE_ERROR(ZeroInitialState);
OBSYN_DEFINE_ERROR(MonitorDiverged);
OBSYN_DEFINE_ERROR(LineSearchStalled);
OBSYN_DEFINE_ERROR(CovarianceBreakdown);
OBSYN_DEFINE_ERROR(IoError);
OBSYN_DEFINE_ERROR(ConfigError);

#undef OBSYN_DEFINE_ERROR

/// Raised when an observation map is evaluated outside its domain guard.
/// `member` identifies the offending bundle trajectory: 0 for the nominal,
/// +i for plus[i-1], -i for minus[i-1].
struct DomainViolation : Error {
  DomainViolation(double t_, int member_, const std::string& what)
      : Error("DomainViolation", what), t(t_), member(member_) {}
  explicit DomainViolation(const std::string& what)
      : Error("DomainViolation", what), t(0.0), member(0) {}
  double t;
  int member;
};

}  // namespace obsyn
