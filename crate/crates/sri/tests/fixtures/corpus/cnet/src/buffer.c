#include <stdlib.h>
#include <string.h>
#include "buffer.h"

int buffer_init(struct buffer *b, size_t cap)
{
    b->data = malloc(cap);
    if (b->data == NULL) {
        return -1;
    }
    b->len = 0;
    b->cap = cap;
    return 0;
}

int buffer_append(struct buffer *b, const char *src, size_t n)
{
    if (b->len + n > b->cap) {
        size_t cap = b->cap * 2;
        while (cap < b->len + n) {
            cap *= 2;
        }
        char *p = realloc(b->data, cap);
        if (p == NULL) {
            return -1;
        }
        b->data = p;
        b->cap = cap;
    }
    memcpy(b->data + b->len, src, n);
    b->len += n;
    return 0;
}

void buffer_free(struct buffer *b)
{
    free(b->data);
    b->data = NULL;
    b->len = b->cap = 0;
}
