#ifndef RECALL_REMOTE_ORACLE_HPP
#define RECALL_REMOTE_ORACLE_HPP

#include <chrono>
#include <regex>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "errors.hpp"
#include "oracle.hpp"

namespace recall
{

struct OracleUrl {
    std::string scheme_host_port; // "http://host:port"
    std::string prefix;           // path before /v1/oracle, no trailing slash
};

/// Accepts http://host[:port][/prefix]. Anything else is an ArgumentError.
inline OracleUrl parse_oracle_url(const std::string& url)
{
    static const std::regex re(R"(^(http://[A-Za-z0-9.\-]+|http://\[[0-9A-Fa-f:.]+\])(:[0-9]{1,5})?(/[^?#\s]*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) {
        throw ArgumentError("malformed oracle url '" + url + "' (expected http://host[:port][/prefix])");
    }
    OracleUrl out;
    out.scheme_host_port = m[1].str() + m[2].str();
    out.prefix = m[3].str();
    while (!out.prefix.empty() && out.prefix.back() == '/') {
        out.prefix.pop_back();
    }
    return out;
}

struct RemoteOracleOptions {
    std::chrono::milliseconds connect_timeout{2000};
    std::chrono::milliseconds read_timeout{60000};
};

/// Oracle reached over HTTP: POST {prefix}/v1/oracle with the wire request.
///
/// Connection failures, 429 and 5xx become TransportError (retried by the
/// calibration loop); other non-200 statuses and non-JSON bodies become
/// ProtocolError. Each call opens its own client, so concurrent calls are safe.
class RemoteOracle final : public OracleBackend
{
public:
    explicit RemoteOracle(const std::string& url, RemoteOracleOptions options = {})
        : url_(parse_oracle_url(url)), options_(options)
    {
    }

    nlohmann::json call(const nlohmann::json& request) const override
    {
        auto client = make_client();
        const auto path = url_.prefix + std::string(kOraclePath);
        auto res = client.Post(path, request.dump(), "application/json");
        if (!res) {
            throw TransportError("oracle unreachable at " + url_.scheme_host_port + path + ": "
                                 + httplib::to_string(res.error()));
        }
        if (res->status == 429 || res->status >= 500) {
            throw TransportError("oracle returned HTTP " + std::to_string(res->status));
        }
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception&) {
            throw ProtocolError("oracle returned a non-JSON body (HTTP " + std::to_string(res->status) + ")");
        }
        if (res->status != 200 && !(body.is_object() && body.contains("error"))) {
            throw ProtocolError("oracle returned HTTP " + std::to_string(res->status));
        }
        return body;
    }

    /// True when GET {prefix}/healthz answers 200.
    bool healthy() const
    {
        auto client = make_client();
        auto res = client.Get(url_.prefix + "/healthz");
        return res && res->status == 200;
    }

    const OracleUrl& url() const { return url_; }

private:
    httplib::Client make_client() const
    {
        httplib::Client client(url_.scheme_host_port);
        client.set_connection_timeout(options_.connect_timeout);
        client.set_read_timeout(options_.read_timeout);
        client.set_write_timeout(options_.read_timeout);
        return client;
    }

    OracleUrl url_;
    RemoteOracleOptions options_;
};

} // namespace recall

#endif
