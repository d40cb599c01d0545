#pragma once

#include <string>

#include "hybridkinetics/dsl.hpp"

namespace hktest {

// Small models written in the text format; parse failures abort the test loudly.
inline hybridkinetics::ModelDocument model(const std::string& text) { return hybridkinetics::parse_model_or_throw(text); }

inline hybridkinetics::ModelDocument cook_skeleton() {
    return model("MODEL skeleton\nSPECIES G G*\nPARAMS k1=20 km1=10\nINIT G=1 G*=0\n"
                 "RXN on: G -> G* @ k1\nRXN off: G* -> G @ km1\n");
}

} // namespace hktest
