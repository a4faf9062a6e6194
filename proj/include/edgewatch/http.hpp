#pragma once

// Every translation unit that talks HTTP goes through this header so the
// TLS configuration of cpp-httplib stays consistent across the library.
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <string>

namespace edgewatch {

/// "https://host:port/prefix" -> {"https://host:port", "/prefix"}; prefix has no trailing slash.
struct BaseUrl {
  std::string origin;
  std::string path_prefix;
};

BaseUrl split_base_url(const std::string &url);

}  // namespace edgewatch
