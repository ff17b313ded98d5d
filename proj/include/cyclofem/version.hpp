#pragma once

#define CYCLOFEM_VERSION "0.1.0"
