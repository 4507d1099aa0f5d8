// SPDX-License-Identifier: Apache-2.0
#pragma once

// HTTP transport for remote matcher backends. Kept out of backend.hpp so the
// rule-based path does not pull in the HTTP stack.

#include <memory>
#include <string>

#include <httplib.h>

#include "vapitest/backend.hpp"
#include "vapitest/errors.hpp"

namespace vapitest {

struct ParsedUrl {
    std::string host_port;  // scheme://host:port
    std::string path;       // /path or /
};

inline ParsedUrl parse_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw TransportError("url lacks a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpTransport : public Transport {
public:
    /// `url` addresses the completion endpoint, e.g. http://host:8080/complete.
    /// The auth token, when non-empty, is sent as a bearer token.
    explicit HttpTransport(const std::string& url, std::string token = "")
        : parsed_(parse_url(url)), token_(std::move(token)) {}

    std::string post(const std::string& body) override {
        httplib::Client client(parsed_.host_port);
        client.set_connection_timeout(5, 0);
        client.set_read_timeout(30, 0);
        httplib::Headers headers;
        if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
        auto res = client.Post(parsed_.path, headers, body, "application/json");
        if (!res)
            throw TransportError("POST " + parsed_.host_port + parsed_.path + " failed: " +
                                 httplib::to_string(res.error()));
        if (res->status != 200)
            throw TransportError("POST " + parsed_.host_port + parsed_.path +
                                 " returned status " + std::to_string(res->status));
        return res->body;
    }

private:
    ParsedUrl parsed_;
    std::string token_;
};

}  // namespace vapitest
