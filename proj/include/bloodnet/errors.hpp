#pragma once

#include <stdexcept>
#include <string>

namespace bloodnet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration input.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside the admissible range of a constitutive law or lookup.
class DomainError : public Error {
public:
    using Error::Error;
};

/// c^2 + ab <= 0 where the system must be hyperbolic.
class HyperbolicityViolation : public Error {
public:
    using Error::Error;
};

/// Area below the configured floor, or a <= 0.
class CollapsedVessel : public Error {
public:
    using Error::Error;
};

/// A characteristic foot would travel more than cfl_max cells in one step.
class CflViolation : public Error {
public:
    using Error::Error;
};

class SingularJunction : public Error {
public:
    SingularJunction(std::string node, double rcond, const std::string& context = {})
        : Error(context + "singular junction system at node '" + node +
                "' (reciprocal condition estimate " + std::to_string(rcond) + ")"),
          node_id(std::move(node)),
          rcond_estimate(rcond) {}

    std::string node_id;
    double rcond_estimate;
};

class PicardDivergence : public Error {
public:
    using Error::Error;
};

/// Raised by the driver when a well-posedness condition fails before or during a run.
class WellPosednessFailure : public Error {
public:
    using Error::Error;
};

/// Rethrows the active exception with `context` prepended, keeping its type.
[[noreturn]] inline void rethrow_with_context(const std::string& context) {
    try {
        throw;
    } catch (const SingularJunction& e) {
        throw SingularJunction(e.node_id, e.rcond_estimate, context);
    } catch (const ConfigError& e) {
        throw ConfigError(context + e.what());
    } catch (const DomainError& e) {
        throw DomainError(context + e.what());
    } catch (const HyperbolicityViolation& e) {
        throw HyperbolicityViolation(context + e.what());
    } catch (const CollapsedVessel& e) {
        throw CollapsedVessel(context + e.what());
    } catch (const CflViolation& e) {
        throw CflViolation(context + e.what());
    } catch (const PicardDivergence& e) {
        throw PicardDivergence(context + e.what());
    } catch (const WellPosednessFailure& e) {
        throw WellPosednessFailure(context + e.what());
    } catch (const Error& e) {
        throw Error(context + e.what());
    }
}

}  // namespace bloodnet
