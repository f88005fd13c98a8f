#pragma once

#include <atomic>

#include "pai/http.hpp"
#include "pai/raster.hpp"

namespace pai {

/// Offline WMS 1.3.0 GetMap endpoint backed by a georeferenced raster. Any URL
/// is accepted; the query decides the answer. The reply is a PNG resampled
/// nearest-neighbour at pixel centres; a BBOX reaching outside the raster gets
/// an OGC service exception, other malformed requests a 400.
class RasterWmsTransport : public Transport {
 public:
  explicit RasterWmsTransport(RasterImage source);
  HttpResponse send(const HttpRequest& request) override;
  int request_count() const { return requests_; }

 private:
  RasterImage source_;
  std::atomic<int> requests_{0};
};

}  // namespace pai
