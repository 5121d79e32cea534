/* Links against the shared library through the generated header. */
#include <stdio.h>
#include <string.h>

#include "studyscope.h"

#define CHECK(cond)                                              \
  do {                                                           \
    if (!(cond)) {                                               \
      const char *e = studyscope_last_error();                   \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,    \
              #cond, e ? e : "no error");                        \
      return 1;                                                  \
    }                                                            \
  } while (0)

int main(int argc, char **argv) {
  if (argc != 6) {
    fprintf(stderr, "usage: smoke schema corpus abstracts bib refs\n");
    return 2;
  }
  StudyscopeSnapshot *snap = NULL;
  CHECK(studyscope_snapshot_open_files(argv[1], argv[2], argv[3], argv[4], argv[5], &snap) ==
        STUDYSCOPE_STATUS_OK);
  CHECK(studyscope_snapshot_len(snap) == 10);

  char *json = NULL;
  CHECK(studyscope_neighbors(snap, "s04", "db", 1.0, &json) == STUDYSCOPE_STATUS_OK);
  CHECK(strstr(json, "\"s10\"") != NULL);
  studyscope_string_free(json);

  json = NULL;
  CHECK(studyscope_neighbors(snap, "nope", "db", 1.0, &json) == STUDYSCOPE_STATUS_UNKNOWN_STUDY);
  CHECK(json == NULL);
  CHECK(studyscope_last_error() != NULL);

  CHECK(studyscope_filter(snap, "{\"Sensors\":{\"include\":[\"EEG\"]}}", &json) ==
        STUDYSCOPE_STATUS_OK);
  CHECK(strcmp(json, "[\"s06\"]") == 0);
  studyscope_string_free(json);

  CHECK(studyscope_filter(NULL, NULL, &json) == STUDYSCOPE_STATUS_NULL_ARGUMENT);

  studyscope_snapshot_free(snap);
  puts("ok");
  return 0;
}
