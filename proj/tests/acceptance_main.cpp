#include <iostream>
#include "flexbeam/verify.hpp"
int main(){ flexbeam::VerifyOptions o; o.data_dir = FLEXBEAM_DATA_DIR; return flexbeam::acceptance_main(o, std::cout) == 0 ? 0 : 1; }
