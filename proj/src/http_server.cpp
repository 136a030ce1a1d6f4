#include "ledgerscope/http_server.hpp"
#include "ledgerscope/timefmt.hpp"

#include <httplib.h>

#include <charconv>
#include <functional>

namespace ledgerscope {

using json = nlohmann::json;

namespace {

using Handler = std::function<json(const httplib::Request&, httplib::Response&)>;

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
    send_json(res, status, json{{"error", {{"code", code}, {"message", message}}}});
}

httplib::Server::Handler wrap(Handler h, int ok_status = 200) {
    return [h = std::move(h), ok_status](const httplib::Request& req, httplib::Response& res) {
        try {
            json body = h(req, res);
            if (body.is_null()) {
                res.status = 204;
            } else {
                send_json(res, ok_status, body);
            }
        } catch (const NotFound& e) {
            send_error(res, 404, "not_found", e.what());
        } catch (const StateError& e) {
            send_error(res, 409, "conflict", e.what());
        } catch (const InvalidArgument& e) {
            send_error(res, 400, "invalid_argument", e.what());
        } catch (const ParseError& e) {
            send_error(res, 400, "invalid_argument", e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, "invalid_argument", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string("request body is not valid JSON: ") + e.what());
    }
}

template <class T>
T parse_number(const std::string& text, const char* name) {
    T v{};
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size() || text.empty())
        throw InvalidArgument(std::string("'") + name + "' must be a non-negative integer, got '" + text + "'");
    return v;
}

template <class T>
std::optional<T> query_number(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    return parse_number<T>(req.get_param_value(name), name);
}

std::string query_string(const httplib::Request& req, const char* name, std::string fallback = {}) {
    return req.has_param(name) ? req.get_param_value(name) : fallback;
}

const std::string& sid(const httplib::Request& req) { return req.path_params.at("sid"); }

NodeId node_param(const httplib::Request& req) { return parse_number<NodeId>(req.path_params.at("node"), "node"); }

}  // namespace

struct HttpServer::Impl {
    explicit Impl(Service& s) : service(s) {}
    Service& service;
    httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
    auto& s = impl_->server;
    auto& svc = impl_->service;
    const std::string base = "/api/v1";

    s.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    s.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    s.Get(base + "/corpora", wrap([&](const auto&, auto&) { return svc.list_corpora(); }));

    s.Post(base + "/sessions", wrap([&](const auto& req, auto&) { return svc.create_session(body_of(req)); }, 201));
    s.Get(base + "/sessions/:sid", wrap([&](const auto& req, auto&) { return svc.session_info(sid(req)); }));
    s.Delete(base + "/sessions/:sid", wrap([&](const auto& req, auto&) {
                 svc.delete_session(sid(req));
                 return json();
             }));
    s.Put(base + "/sessions/:sid/range",
          wrap([&](const auto& req, auto&) { return svc.set_range(sid(req), body_of(req)); }));

    s.Get(base + "/sessions/:sid/tree", wrap([&](const auto& req, auto&) { return svc.tree(sid(req)); }));
    s.Post(base + "/sessions/:sid/tree/:node/split",
           wrap([&](const auto& req, auto&) { return svc.split(sid(req), node_param(req), body_of(req)); }, 201));
    s.Post(base + "/sessions/:sid/tree/:node/select",
           wrap([&](const auto& req, auto&) { return svc.select(sid(req), node_param(req)); }));
    s.Put(base + "/sessions/:sid/tree/:node/label",
          wrap([&](const auto& req, auto&) { return svc.relabel(sid(req), node_param(req), body_of(req)); }));
    s.Delete(base + "/sessions/:sid/tree/:node",
             wrap([&](const auto& req, auto&) { return svc.delete_split(sid(req), node_param(req)); }));
    s.Post(base + "/sessions/:sid/tree/:node/materialize",
           wrap([&](const auto& req, auto&) {
               return svc.materialize_cluster(sid(req), node_param(req), body_of(req));
           }, 201));

    s.Get(base + "/sessions/:sid/histogram", wrap([&](const auto& req, auto&) {
              Service::HistogramQuery q;
              q.node = query_number<NodeId>(req, "node");
              q.key = query_string(req, "key");
              if (q.key.empty()) throw InvalidArgument("'key' is required");
              q.variant = query_string(req, "variant");
              q.bins = query_number<std::uint32_t>(req, "bins").value_or(kDefaultBins);
              q.scale = query_string(req, "scale", "auto");
              return svc.histogram(sid(req), q);
          }));
    s.Get(base + "/sessions/:sid/volume", wrap([&](const auto& req, auto&) {
              return svc.volume(sid(req), query_number<NodeId>(req, "node"), query_string(req, "bucket", "month"));
          }));

    s.Post(base + "/sessions/:sid/cluster",
           wrap([&](const auto& req, auto&) { return svc.start_cluster(sid(req), body_of(req)); }, 202));
    s.Get(base + "/jobs/:job", wrap([&](const auto& req, auto&) { return svc.job(req.path_params.at("job")); }));
    s.Delete(base + "/jobs/:job",
             wrap([&](const auto& req, auto&) { return svc.cancel_job(req.path_params.at("job")); }));

    s.Get(base + "/sessions/:sid/entities", wrap([&](const auto& req, auto&) {
              Service::EntityQuery q;
              q.node = query_number<NodeId>(req, "node");
              q.cluster = query_number<std::uint32_t>(req, "cluster");
              q.sort = query_string(req, "sort", q.sort);
              q.variant = query_string(req, "variant");
              const auto order = query_string(req, "order", "desc");
              if (order != "asc" && order != "desc") throw InvalidArgument("'order' must be asc or desc");
              q.descending = order == "desc";
              q.page = query_number<std::uint32_t>(req, "page").value_or(0);
              q.page_size = query_number<std::uint32_t>(req, "page_size");
              return svc.list_entities(sid(req), q);
          }));
    s.Get(base + "/sessions/:sid/entity/:eid/txs", wrap([&](const auto& req, auto&) {
              const auto eid = parse_number<EntityId>(req.path_params.at("eid"), "entity");
              std::optional<TimeRange> range;
              if (req.has_param("from") || req.has_param("to")) {
                  TimeRange r{0, kAllTime.to};
                  if (req.has_param("from")) r.from = parse_time(req.get_param_value("from"));
                  if (req.has_param("to")) r.to = parse_time(req.get_param_value("to"));
                  range = r;
              }
              return svc.entity_transactions(sid(req), eid, query_string(req, "role", "sender"), range);
          }));

    s.Get(base + "/sessions/:sid/tree-document",
          wrap([&](const auto& req, auto&) { return svc.export_document(sid(req)); }));
    s.Post(base + "/sessions/:sid/tree-document",
           wrap([&](const auto& req, auto&) { return svc.import_document(sid(req), body_of(req)); }));
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

bool HttpServer::mount_static(const std::string& dir) { return impl_->server.set_mount_point("/", dir); }

}  // namespace ledgerscope
