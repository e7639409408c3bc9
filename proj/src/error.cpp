#include "ip2cp/error.hpp"
