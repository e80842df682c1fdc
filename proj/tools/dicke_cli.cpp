#include <exception>
#include <iostream>

#include "dicke/cli_config.hpp"
#include "dicke/errors.hpp"
#include "dicke/pipeline.hpp"

int main(int argc, char** argv) {
    try {
        std::string help;
        const auto cfg = dicke::parse_config(argc, argv, &help);
        if (!cfg) {
            std::cout << help;
            return dicke::kExitSuccess;
        }
        return dicke::run_pipeline(*cfg, std::cout, std::cerr);
    } catch (const dicke::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return dicke::kExitError;
}
