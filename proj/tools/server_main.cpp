#include <iostream>

#include <CLI11.hpp>

#include "vis_presence/error.hpp"
#include "vis_presence/relay_server.hpp"

int main(int argc, char** argv) {
  using namespace vis_presence;
  CLI::App app{"WebSocket relay for collaborative visualization presence"};
  relay::ServerFlags flags;
  app.add_option("--bind", flags.bind, "host:port to listen on (env VIS_PRESENCE_BIND)");
  app.add_option("--max-users", flags.max_users, "users per room (env VIS_PRESENCE_MAX_USERS)");
  app.add_option("--idle-timeout", flags.idle_timeout_s, "seconds without traffic before eviction");
  app.add_option("--ping-interval", flags.ping_interval_s, "seconds between server pings");
  CLI11_PARSE(app, argc, argv);

  try {
    const relay::ServerConfig config = relay::resolve_config(flags);
    std::cerr << "vis-presence-server listening on " << config.bind_address << "\n";
    relay::serve(config);
  } catch (const Error& e) {
    std::cerr << "vis-presence-server: " << e.what() << "\n";
    return e.code() == ErrorCode::InvalidConfig ? 2 : 1;
  }
  return 0;
}
