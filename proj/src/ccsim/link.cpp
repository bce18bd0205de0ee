#include "tcpid/ccsim/link.hpp"

#include <cmath>

namespace tcpid::ccsim {

namespace {
void require(bool ok, const char* field, const char* what) {
  if (!ok) throw std::invalid_argument(std::string(field) + ": " + what);
}
}  // namespace

void LinkConfig::validate() const {
  require(std::isfinite(rate_bps) && rate_bps > 0, "rate_bps", "must be > 0");
  require(std::isfinite(prop_rtt) && prop_rtt > 0, "prop_rtt", "must be > 0");
  require(buffer >= 1, "buffer", "must be >= 1 packet");
  require(mtu > 0, "mtu", "must be > 0");
  require(random_loss >= 0 && random_loss < 1, "random_loss", "must be in [0, 1)");
  require(wireless || random_loss == 0, "random_loss",
          "must be 0 on a wired link");
}

void RadioConfig::validate() const {
  require(rlc_cap >= 1, "rlc_cap", "must be >= 1 packet");
  require(std::isfinite(service_time) && service_time > 0, "service_time",
          "must be > 0");
  require(max_retx >= 0, "max_retx", "must be >= 0");
}

}  // namespace tcpid::ccsim
