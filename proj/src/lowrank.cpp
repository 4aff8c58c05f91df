#include "voltdmd/lowrank.hpp"

#include <charconv>
#include <cmath>

#include "io_util.hpp"

namespace voltdmd {

void RankPolicy::validate() const {
  switch (mode) {
    case Mode::fixed:
      if (!(value >= 1.0)) throw DataError("fixed rank must be >= 1");
      return;
    case Mode::relative_threshold:
      if (!(value > 0.0 && value < 1.0))
        throw DataError("relative threshold must lie in (0, 1)");
      return;
    case Mode::energy:
      if (!(value > 0.0 && value <= 1.0)) throw DataError("energy fraction must lie in (0, 1]");
      return;
  }
}

std::string RankPolicy::to_string() const {
  switch (mode) {
    case Mode::fixed:
      return "fixed:" + std::to_string(static_cast<long long>(value));
    case Mode::relative_threshold:
      return "rel:" + detail::format_g(value, 17);
    case Mode::energy:
      return "energy:" + detail::format_g(value, 17);
  }
  return {};
}

RankPolicy RankPolicy::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw DataError("rank policy '" + std::string(text) + "' must look like rel:1e-10");
  const auto kind = text.substr(0, colon);
  const auto arg = text.substr(colon + 1);
  double x = 0.0;
  const auto res = std::from_chars(arg.data(), arg.data() + arg.size(), x);
  if (res.ec != std::errc() || res.ptr != arg.data() + arg.size())
    throw DataError("rank policy '" + std::string(text) + "' has a bad parameter");
  RankPolicy p;
  if (kind == "fixed") {
    if (x != std::floor(x)) throw DataError("fixed rank must be an integer");
    p = fixed(static_cast<Eigen::Index>(x));
  } else if (kind == "rel") {
    p = relative(x);
  } else if (kind == "energy") {
    p = energy(x);
  } else {
    throw DataError("unknown rank policy '" + std::string(kind) + "'");
  }
  p.validate();
  return p;
}

}  // namespace voltdmd
