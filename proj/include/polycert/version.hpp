#pragma once
namespace polycert { inline constexpr const char* kVersion = "0.1.0"; }
