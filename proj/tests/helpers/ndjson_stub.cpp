// Minimal external-classifier stand-in for protocol tests. Reads NDJSON
// requests on stdin and answers on stdout. The first argument selects a
// behaviour:
//   sum (default)  label = byte sum of the raster mod 97, confidence 0.25
//   wrong-id       answers with id + 1
//   garbage        prints a non-JSON line instead of a response
//   die            exits without answering the first request
//   sleep          waits 5 seconds before each response
//   badconf        reports confidence 1.5

#include <chrono>
#include <cstdint>
#include <iostream>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "cex/detail/base64.hpp"

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "sum";
  std::string line;
  while (std::getline(std::cin, line)) {
    const nlohmann::json request = nlohmann::json::parse(line, nullptr, false);
    if (request.is_discarded()) {
      std::cerr << "stub: bad request\n";
      return 1;
    }
    if (mode == "die") return 0;
    if (mode == "garbage") {
      std::cout << "this is not json" << std::endl;
      continue;
    }
    if (mode == "sleep") std::this_thread::sleep_for(std::chrono::seconds(5));

    const auto bytes = cex::detail::base64_decode(request["pixels"].get<std::string>());
    std::uint64_t sum = 0;
    for (std::uint8_t b : bytes) sum += b;

    nlohmann::json response = {
        {"id", request["id"].get<std::uint64_t>() + (mode == "wrong-id" ? 1 : 0)},
        {"label", static_cast<int>(sum % 97)},
        {"confidence", mode == "badconf" ? 1.5 : 0.25},
    };
    std::cout << response.dump() << std::endl;
  }
  return 0;
}
