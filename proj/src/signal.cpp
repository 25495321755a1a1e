#include "sentinel/signal.hpp"

namespace sentinel {

void require_nonempty(const Signal2D& x, const char* who) {
  if (x.T <= 0 || x.d <= 0) throw ValidationError(std::string(who) + ": empty signal");
  if (x.data.size() != static_cast<std::size_t>(x.T) * static_cast<std::size_t>(x.d))
    throw ValidationError(std::string(who) + ": data size does not match T*d");
}

void require_same_shape(const Signal2D& a, const Signal2D& b, const char* who) {
  if (!a.same_shape(b)) throw ValidationError(std::string(who) + ": shape mismatch");
}

int channel_index(const Signal2D& x, const std::string& name) {
  for (std::size_t i = 0; i < x.channels.size(); ++i)
    if (x.channels[i] == name) return static_cast<int>(i);
  return -1;
}

}  // namespace sentinel
