// Regenerates the committed mock task pack (env specs, scripted fixtures,
// run config) from the deterministic builder. Run from the repo root:
//   gen_fixture_pack fixtures/pack fixtures/corpus

#include <iostream>

#include "rwom/testing/fixture_pack.hpp"

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: gen_fixture_pack <pack-dir> <corpus-dir>\n";
        return 1;
    }
    try {
        rwom::testing::write_pack(argv[1], argv[2]);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cout << "wrote pack to " << argv[1] << "\n";
    return 0;
}
