#include <stdio.h>

#include "alch/alch.h"

int main(void) {
    alch_server* server = NULL;
    alch_session* session = NULL;
    alch_matrix* m = NULL;
    double values[6] = {1, 2, 3, 4, 5, 6};
    double back[6] = {0};
    int i;

    if (alch_server_start("127.0.0.1", 0, 2, 0, &server) != ALCH_OK) return 1;
    if (alch_connect("127.0.0.1", alch_server_port(server), 2, 0, 0, &session) != ALCH_OK) return 2;
    if (alch_send_matrix(session, 3, 2, NULL, values, &m) != ALCH_OK) return 3;
    if (alch_fetch_matrix(session, m, back, 6) != ALCH_OK) return 4;
    for (i = 0; i < 6; ++i) {
        if (back[i] != values[i]) return 5;
    }
    alch_matrix_free(m);
    alch_session_free(session);
    alch_server_free(server);
    puts("ok");
    return 0;
}
