package com.acme.codec;

public class MessageService {

    private final Codec codec;

    public MessageService(Codec codec) {
        this.codec = codec;
    }

    public Object receive(String body) {
        return codec.decode(body);
    }
}
