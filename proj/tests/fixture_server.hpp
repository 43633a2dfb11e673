#pragma once

#include <httplib.h>

#include <deque>
#include <map>
#include <mutex>
#include <string>
#include <thread>

namespace tidal::test {

// Loopback HTTP server for media tests. Each path serves a scripted list of
// statuses (the last one repeats) and then the body with its content type.
class FixtureServer {
public:
    struct Route {
        std::deque<int> statuses{200};
        std::string body;
        std::string content_type = "application/octet-stream";
        int hits = 0;
    };

    FixtureServer() {
        server_.Get(".*", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mu_);
            auto it = routes_.find(req.path);
            if (it == routes_.end()) {
                res.status = 404;
                return;
            }
            Route& r = it->second;
            ++r.hits;
            const int status = r.statuses.front();
            if (r.statuses.size() > 1) r.statuses.pop_front();
            res.status = status;
            if (status >= 200 && status < 300) res.set_content(r.body, r.content_type);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~FixtureServer() {
        server_.stop();
        thread_.join();
    }

    void add(const std::string& path, std::string body, std::string content_type, std::deque<int> statuses = {200}) {
        std::lock_guard lock(mu_);
        routes_[path] = Route{std::move(statuses), std::move(body), std::move(content_type), 0};
    }

    int hits(const std::string& path) {
        std::lock_guard lock(mu_);
        return routes_.at(path).hits;
    }

    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }
    int port() const { return port_; }

private:
    httplib::Server server_;
    std::thread thread_;
    std::mutex mu_;
    std::map<std::string, Route> routes_;
    int port_ = -1;
};

}  // namespace tidal::test
