#include "axon/params.hpp"

#include "axon/errors.hpp"

namespace axon {
namespace {

void check(std::vector<std::string>& out, bool ok, const std::string& msg) {
    if (!ok) out.push_back(msg);
}

}  // namespace

std::vector<std::string> PhysicalParams::violations() const {
    std::vector<std::string> v;
    check(v, D > 0.0, "D must be > 0");
    check(v, g >= 0.0, "g must be >= 0");
    check(v, l_c > 0.0, "l_c must be > 0");
    check(v, r_g > 0.0, "r_g must be > 0");
    check(v, r_tilde_g >= 0.0, "r_tilde_g must be >= 0");
    check(v, c_inf > 0.0, "c_inf must be > 0");
    check(v, D_e >= 0.0, "D_e must be >= 0");
    check(v, l_s > 0.0, "l_s must be > 0");
    check(v, l_bar >= l_s, "l_bar must be >= l_s");
    return v;
}

void PhysicalParams::validate() const {
    auto v = violations();
    if (!v.empty()) throw ValidationError(std::move(v));
}

}  // namespace axon
