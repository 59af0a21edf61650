package com.acme.flow;

import com.thoughtworks.xstream.XStream;

public class Router {

    private final XStream xstream = new XStream();

    public Object route(String message, boolean fast) {
        if (fast) {
            return viaLeft(message);
        }
        return viaRight(message);
    }

    private Object viaLeft(String body) {
        return sink(body);
    }

    private Object viaRight(String body) {
        String normalized = body.replace('\r', ' ');
        return sink(normalized);
    }

    private Object sink(String xml) {
        return xstream.fromXML(xml);
    }
}
